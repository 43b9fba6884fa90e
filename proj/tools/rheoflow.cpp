#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "rheoflow/checks.hpp"
#include "rheoflow/errors.hpp"
#include "rheoflow/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCheck = 4;

void print_summary(const rheoflow::RunSummary& s) {
  std::cout << "output: " << s.output_dir << "\n";
  if (s.iterations > 0)
    std::cout << "iterations: " << s.iterations << (s.converged ? " (converged)" : " (not converged)") << "\n";
  else
    std::cout << "steps: " << s.steps << ", final time: " << s.final_time << "\n";
}

nlohmann::json to_json(const rheoflow::CheckResult& r) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : r.parts)
    parts.push_back({{"name", p.name},
                     {"measured", p.measured},
                     {"relation", p.relation},
                     {"tolerance", p.tolerance},
                     {"pass", p.pass()}});
  nlohmann::json j = {{"id", r.id},
                      {"suite", r.suite},
                      {"description", r.description},
                      {"measured", r.measured},
                      {"relation", r.relation},
                      {"tolerance", r.tolerance},
                      {"pass", r.pass},
                      {"seconds", r.seconds},
                      {"parts", parts}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rheoflow: incompressible non-Newtonian and mixture flow solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run a simulation from a config file");
  run->add_option("config", config_path, "INI configuration file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.directory)");
  run->add_option("--seed", seed, "random seed (overrides run.seed)");

  std::string filter;
  bool json = false;
  auto* check = app.add_subcommand("check", "run invariant suites and acceptance criteria");
  check->add_option("--filter", filter, "check id (e.g. C04) or suite name (e.g. rheology)");
  check->add_flag("--json", json, "print a JSON array instead of text lines");

  std::string checkpoint_path, resume_out;
  auto* resume = app.add_subcommand("resume", "continue a direct run from a checkpoint");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint written by run")->required();
  resume->add_option("--out", resume_out, "output directory (default: <checkpoint dir>/resume)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      rheoflow::SimulationConfig cfg = rheoflow::parse_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (seed) cfg.seed = *seed;
      print_summary(rheoflow::run_simulation(cfg));
      return kExitOk;
    }
    if (*resume) {
      print_summary(rheoflow::resume_simulation(checkpoint_path, resume_out));
      return kExitOk;
    }
    if (*check) {
      bool any = false, all = true;
      nlohmann::json out = nlohmann::json::array();
      rheoflow::run_checks(filter, {}, [&](const rheoflow::CheckResult& r) {
        any = true;
        all = all && r.pass;
        if (json) {
          out.push_back(to_json(r));
        } else {
          std::cout << rheoflow::format_check_line(r) << std::endl;
        }
      });
      if (json) std::cout << out.dump(2) << "\n";
      if (!any) {
        std::cerr << "rheoflow: no check matches '" << filter << "'\n";
        return kExitConfig;
      }
      return all ? kExitOk : kExitCheck;
    }
  } catch (const rheoflow::ConfigError& e) {
    std::cerr << "rheoflow: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rheoflow::SolverAbort& e) {
    std::cerr << "rheoflow: solver abort: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "rheoflow: error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
