#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rheoflow/fixedpoint.hpp"
#include "rheoflow/galerkin.hpp"
#include "rheoflow/gks.hpp"

namespace rheoflow {

enum class ModelKind { Newtonian, PowerLaw, Graffi, FullGks, KS };
enum class DriverKind { Direct, Periodic, Picard };
enum class ConstraintKind { None, L2Ball, PointwiseBall };

const char* to_string(ModelKind m);
const char* to_string(DriverKind d);
const char* to_string(ConstraintKind c);

/// Every field has an INI key "section.key"; the README lists them.
struct SimulationConfig {
  // [grid]
  int dim = 2;
  int n_points = 64;
  // [model]
  ModelKind model = ModelKind::Newtonian;
  // [power_law]
  PowerLawParams power_law{0.1, 2.0};
  // [mixture]
  MixtureParams mixture;
  ThetaSign theta_sign = ThetaSign::Canonical;
  // [constraint]
  ConstraintKind constraint = ConstraintKind::None;
  double constraint_radius = 2.0;
  double kappa = 1e3;
  // [driver]
  DriverKind driver = DriverKind::Direct;
  double period = 1.0;
  double reg_eps = 2.0;
  double density_lower = 0.5;
  double density_upper = 1.5;
  int period_steps = 200;
  int max_iters = 60;
  double tol = 1e-8;
  double ball_radius = 10.0;
  double horizon = 0.5;
  int max_halvings = 5;
  // [time]
  double dt = 1e-3;
  double t_end = 1.0;
  // [scenario]
  std::string scenario = "taylor-green";
  double amplitude = 1.0;
  int modes = 12;
  GalerkinScheme scheme = GalerkinScheme::IMEX;
  // [output]
  std::string output_dir = "out";
  int stride = 1;
  int checkpoint_stride = 0;
  // [run]
  std::uint64_t seed = 0;
  double blowup_threshold = 1e6;

  bool is_gks() const { return model == ModelKind::Graffi || model == ModelKind::FullGks || model == ModelKind::KS; }
  GksModel gks_model() const;
  /// Collects every violated rule; throws ConfigError listing them all.
  void validate() const;
};

/// Parses "[section]" / "key = value" text. Unknown sections or keys, type
/// mismatches, a missing required key (model.kind, time.dt, time.t_end,
/// scenario.name) and inconsistent model blocks are reported together in one ConfigError.
SimulationConfig parse_config_string(const std::string& text);
SimulationConfig parse_config(const std::string& path);
/// Every key with its effective value; parse_config_string(to_ini(c)) == c.
std::string to_ini(const SimulationConfig& config);

extern const char* const kScenarioNames[5];

/// Initial data and forcing of a named preset on the configured grid.
struct ScenarioSetup {
  ScalarField rho0;
  VectorField u0;
  std::function<VectorField(double)> forcing;
};
ScenarioSetup build_scenario(const SimulationConfig& config);

struct RunSummary {
  std::string output_dir;
  long long steps = 0;
  double final_time = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Runs the configured driver and writes diagnostics.csv, config.ini and
/// checkpoints into config.output_dir (created if needed). Solver failures
/// propagate as SolverAbort after the partial CSV has been flushed.
RunSummary run_simulation(const SimulationConfig& config);

/// Continues a direct-driver run from a checkpoint written by run_simulation,
/// using the config.ini stored next to it. Output goes to out_dir
/// (default: "<checkpoint dir>/resume").
RunSummary resume_simulation(const std::string& checkpoint_path, const std::string& out_dir = {});

/// First line of every diagnostics.csv.
std::string diagnostics_schema_line(const SimulationConfig& config);

}  // namespace rheoflow
