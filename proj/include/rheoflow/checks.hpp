#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rheoflow/rheology.hpp"

namespace rheoflow {

/// One measured quantity of a check and its pinned bound.
struct CheckPart {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  /// "<=", "<", ">=" or ">": how measured must compare with tolerance.
  std::string relation = "<=";
  bool pass() const;
};

/// Outcome of one check. measured/tolerance/relation repeat the first failing
/// part, or the first part when everything passed.
struct CheckResult {
  std::string id;
  std::string suite;
  std::string description;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation = "<=";
  bool pass = false;
  std::vector<CheckPart> parts;
  double seconds = 0.0;
  /// Non-empty when the check threw instead of producing a measurement.
  std::string error;
};

struct CheckOptions {
  /// Replaces the power-law stress in the structure-condition check. Used by
  /// the mutation smoke test to inject a broken constitutive law.
  std::function<StressLaw(const PowerLawParams&)> stress_override;
};

struct CheckSpec {
  std::string id;
  std::string suite;
  std::string description;
  /// Criteria carry a C prefix; module invariants carry their suite name.
  bool criterion = false;
  std::function<std::vector<CheckPart>(const CheckOptions&)> run;
};

const std::vector<CheckSpec>& check_registry();

/// True when filter is empty or equals the check's id or suite.
bool check_matches(const CheckSpec& entry, const std::string& filter);

/// Runs every matching check in registry order. on_result, if set, is called
/// after each check finishes.
std::vector<CheckResult> run_checks(const std::string& filter = {}, const CheckOptions& options = {},
                                    const std::function<void(const CheckResult&)>& on_result = {});

CheckResult run_check(const CheckSpec& entry, const CheckOptions& options = {});

/// "<id> <suite> measured=<v> <relation> tolerance=<v> PASS|FAIL <part>=<v> ... seconds=<s>"
std::string format_check_line(const CheckResult& result);

}  // namespace rheoflow
