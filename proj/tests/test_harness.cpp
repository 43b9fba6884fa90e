#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "rheoflow/checkpoint.hpp"
#include "rheoflow/checks.hpp"
#include "rheoflow/errors.hpp"
#include "rheoflow/harness.hpp"
#include "rheoflow/operators.hpp"

using namespace rheoflow;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("rheoflow-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Table {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::out_of_range(name);
  }
};

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  Table t;
  std::string line;
  std::getline(in, t.schema);
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, ',');) t.columns.push_back(c);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string c; std::getline(rs, c, ',');) row.push_back(std::stod(c));
    t.rows.push_back(row);
  }
  return t;
}

const char* kMinimal =
    "[model]\nkind = newtonian\n"
    "[time]\ndt = 0.001\nt_end = 0.05\n"
    "[scenario]\nname = taylor-green\n";

std::string config_error(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

SimulationConfig small(const std::string& scenario, ModelKind model) {
  SimulationConfig c;
  c.model = model;
  c.power_law = model == ModelKind::Newtonian ? PowerLawParams{0.1, 2.0} : PowerLawParams{0.05, 2.5};
  c.n_points = 32;
  c.modes = 8;
  c.scenario = scenario;
  c.dt = 2e-3;
  c.t_end = 0.04;
  c.seed = 3;
  if (c.is_gks()) {
    c.mixture.rho10 = 2.0;
    c.mixture.rho20 = 0.5;
    c.mixture.lambda = 0.05;
    c.mixture.mobility = model == ModelKind::KS ? 0.0 : 0.01;
  }
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RHEOFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalNewtonianUsesDefaults) {
  const SimulationConfig c = parse_config_string(kMinimal);
  const SimulationConfig d;
  EXPECT_EQ(c.model, ModelKind::Newtonian);
  EXPECT_EQ(c.dt, 0.001);
  EXPECT_EQ(c.t_end, 0.05);
  EXPECT_EQ(c.dim, d.dim);
  EXPECT_EQ(c.n_points, d.n_points);
  EXPECT_EQ(c.power_law.p, 2.0);
  EXPECT_EQ(c.driver, DriverKind::Direct);
  EXPECT_EQ(c.constraint, ConstraintKind::None);
  EXPECT_EQ(c.stride, 1);
}

TEST(Config, RejectsSubcriticalExponent) {
  const std::string msg = config_error(std::string(kMinimal) + "[power_law]\np = 0.5\n");
  EXPECT_NE(msg.find("p > 1"), std::string::npos) << msg;
}

TEST(Config, RejectsKsWithMobility) {
  const std::string msg = config_error(
      "[model]\nkind = ks\n[mixture]\nmobility = 0.1\n[time]\ndt = 0.001\nt_end = 1\n[scenario]\nname = mixing-blob\n");
  EXPECT_NE(msg.find("ks requires mixture.mobility = 0"), std::string::npos) << msg;
}

TEST(Config, ItemizesEveryError) {
  const std::string msg = config_error("[model]\nkind = newtonian\nbogus = 1\n[time]\ndt = fast\n[grid]\nn_points = 64x\n");
  EXPECT_NE(msg.find("unknown key 'model.bogus'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("time.dt: expected a real number"), std::string::npos) << msg;
  EXPECT_NE(msg.find("grid.n_points: expected an integer"), std::string::npos) << msg;
  EXPECT_NE(msg.find("missing required key 'time.t_end'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("missing required key 'scenario.name'"), std::string::npos) << msg;
}

TEST(Config, RejectsInconsistentBlocks) {
  EXPECT_NE(config_error(std::string(kMinimal) + "[power_law]\np = 3\n").find("newtonian requires"), std::string::npos);
  EXPECT_NE(config_error(std::string(kMinimal) + "[driver]\nkind = periodic\n[constraint]\nkind = l2-ball\n")
                .find("constraint requires driver.kind = direct"),
            std::string::npos);
  EXPECT_NE(config_error("[model]\nkind = newtonian\n[time]\ndt = -1\nt_end = 1\n[scenario]\nname = nowhere\n")
                .find("time.dt must be positive"),
            std::string::npos);
  EXPECT_NE(config_error("[model]\nkind = viscoelastic\n").find("expected one of"), std::string::npos);
  EXPECT_NE(config_error(std::string(kMinimal) + "[model]\nkind = ks\n").find("duplicate section"), std::string::npos);
  EXPECT_THROW(parse_config("/nonexistent/rheoflow.ini"), ConfigError);
}

TEST(Config, IniRoundTrip) {
  SimulationConfig c = small("mixing-blob", ModelKind::FullGks);
  c.theta_sign = ThetaSign::Flipped;
  c.dt = 1.0 / 3.0;
  c.mixture.lambda = 0.1 + 0.2;
  c.seed = 1234567890123ULL;
  const SimulationConfig back = parse_config_string(to_ini(c));
  EXPECT_EQ(to_ini(back), to_ini(c));
  EXPECT_EQ(back.dt, c.dt);
  EXPECT_EQ(back.mixture.lambda, c.mixture.lambda);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.theta_sign, ThetaSign::Flipped);
}

TEST(Scenario, EveryPresetIsAdmissible) {
  for (const char* name : kScenarioNames) {
    SimulationConfig c = small(name, ModelKind::PowerLaw);
    if (std::string(name) == "vi-ball") c.constraint = ConstraintKind::L2Ball;
    const ScenarioSetup s = build_scenario(c);
    EXPECT_GT(min_value(s.rho0), 0.0) << name;
    EXPECT_LT(sup_norm(divergence(s.u0)), 1e-10) << name;
    if (s.forcing) EXPECT_TRUE(s.forcing(0.3).all_finite()) << name;
  }
  // Seeded presets change with the seed.
  SimulationConfig a = small("shear-layer", ModelKind::PowerLaw), b = a;
  b.seed = a.seed + 1;
  EXPECT_GT(sup_norm(build_scenario(a).u0 - build_scenario(b).u0), 0.0);
  EXPECT_EQ(sup_norm(build_scenario(a).u0 - build_scenario(a).u0), 0.0);
}

TEST(Run, TaylorGreenEnergyDecaysAnalytically) {
  ScratchDir dir;
  SimulationConfig c = small("taylor-green", ModelKind::Newtonian);
  c.output_dir = dir.path.string();
  c.stride = 5;
  c.scheme = GalerkinScheme::RK4;
  const RunSummary s = run_simulation(c);
  EXPECT_EQ(s.steps, 20);
  EXPECT_TRUE(fs::exists(dir / "config.ini"));
  EXPECT_TRUE(fs::exists(dir / "checkpoint_final.bin"));
  const Table t = read_csv(dir / "diagnostics.csv");
  EXPECT_EQ(t.schema, diagnostics_schema_line(c));
  ASSERT_EQ(t.rows.size(), 5u);
  const std::size_t it = t.col("time"), ie = t.col("energy");
  for (std::size_t r = 1; r < t.rows.size(); ++r) EXPECT_GT(t.rows[r][it], t.rows[r - 1][it]);
  // |u|^2 decays like exp(-4 mu0 t) for the Newtonian vortex.
  const double E0 = t.rows.front()[ie];
  EXPECT_NEAR(t.rows.back()[ie] / E0, std::exp(-4.0 * 0.1 * t.rows.back()[it]), 1e-6);
  EXPECT_EQ(parse_config(dir / "config.ini").scenario, "taylor-green");
}

TEST(Run, RerunIsBitIdentical) {
  for (ModelKind m : {ModelKind::PowerLaw, ModelKind::KS}) {
    ScratchDir a, b;
    SimulationConfig c = small(m == ModelKind::KS ? "mixing-blob" : "shear-layer", m);
    c.output_dir = a.path.string();
    run_simulation(c);
    c.output_dir = b.path.string();
    run_simulation(c);
    const std::string x = slurp(a / "diagnostics.csv");
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b / "diagnostics.csv"));
    EXPECT_EQ(slurp(a / "checkpoint_final.bin"), slurp(b / "checkpoint_final.bin"));
  }
}

TEST(Run, GksColumnsArePresent) {
  ScratchDir dir;
  SimulationConfig c = small("mixing-blob", ModelKind::Graffi);
  c.output_dir = dir.path.string();
  run_simulation(c);
  const Table t = read_csv(dir / "diagnostics.csv");
  for (const char* name : {"theta_l2", "korteweg_work", "mean_rho", "rho_bar_min"}) EXPECT_NO_THROW(t.col(name));
  for (const auto& row : t.rows) EXPECT_NEAR(row[t.col("mean_rho")], t.rows[0][t.col("mean_rho")], 1e-12);
}

TEST(Run, BlowUpAbortsAfterFlushingCsv) {
  ScratchDir dir;
  SimulationConfig c = small("taylor-green", ModelKind::Newtonian);
  c.output_dir = dir.path.string();
  c.amplitude = 5.0;
  c.blowup_threshold = 1.0;
  EXPECT_THROW(run_simulation(c), SolverAbort);
  const Table t = read_csv(dir / "diagnostics.csv");
  EXPECT_EQ(t.columns.front(), "time");
}

TEST(Run, IterativeDriversWriteTheIterationLog) {
  {
    ScratchDir dir;
    SimulationConfig c = small("periodic-forcing", ModelKind::Newtonian);
    c.power_law = {1.0, 2.0};
    c.driver = DriverKind::Periodic;
    c.period_steps = 40;
    c.tol = 1e-6;
    c.output_dir = dir.path.string();
    const RunSummary s = run_simulation(c);
    EXPECT_TRUE(s.converged);
    const Table t = read_csv(dir / "diagnostics.csv");
    EXPECT_EQ(t.columns, (std::vector<std::string>{"iter", "residual", "contraction_ratio", "horizon"}));
    EXPECT_EQ(static_cast<int>(t.rows.size()), s.iterations);
  }
  {
    ScratchDir dir;
    SimulationConfig c = small("vi-ball", ModelKind::PowerLaw);
    c.power_law = {1.0, 2.5};
    c.amplitude = 0.05;
    c.driver = DriverKind::Picard;
    c.dt = 5e-3;
    c.horizon = 0.2;
    c.output_dir = dir.path.string();
    const RunSummary s = run_simulation(c);
    EXPECT_TRUE(s.converged);
    EXPECT_GE(read_csv(dir / "diagnostics.csv").rows.size(), 2u);
  }
}

TEST(Resume, ContinuesBitExactly) {
  for (ModelKind m : {ModelKind::PowerLaw, ModelKind::FullGks}) {
    ScratchDir dir;
    SimulationConfig c = small(m == ModelKind::FullGks ? "mixing-blob" : "shear-layer", m);
    c.checkpoint_stride = 10;
    c.output_dir = dir.path.string();
    run_simulation(c);
    ASSERT_TRUE(fs::exists(dir / "checkpoint_10.bin"));
    const RunSummary s = resume_simulation(dir / "checkpoint_10.bin");
    EXPECT_EQ(s.steps, 10);
    const Checkpoint whole = load_checkpoint(dir / "checkpoint_final.bin");
    const Checkpoint resumed = load_checkpoint((dir.path / "resume" / "checkpoint_final.bin").string());
    for (const auto& [name, f] : whole.fields) {
      ASSERT_TRUE(resumed.has(name)) << name;
      EXPECT_EQ(resumed.get(name).values, f.values) << name;
    }
  }
}

TEST(Resume, RejectsIterativeDrivers) {
  ScratchDir dir;
  SimulationConfig c = small("periodic-forcing", ModelKind::Newtonian);
  c.power_law = {1.0, 2.0};
  c.driver = DriverKind::Periodic;
  c.period_steps = 20;
  c.tol = 1e-5;
  c.output_dir = dir.path.string();
  run_simulation(c);
  EXPECT_THROW(resume_simulation(dir / "checkpoint_final.bin"), ConfigError);
}

TEST(Checks, FilterSelectsOneSuite) {
  const auto results = run_checks("rheology");
  ASSERT_EQ(results.size(), 2u);
  for (const auto& r : results) {
    EXPECT_EQ(r.suite, "rheology");
    EXPECT_TRUE(r.pass) << format_check_line(r);
  }
  EXPECT_TRUE(run_checks("no-such-suite").empty());
}

TEST(Checks, InjectedStressSignBugFailsStructureCheck) {
  CheckOptions opt;
  opt.stress_override = [](const PowerLawParams& p) {
    return StressLaw([p](const SmallMat& A) { return -1.0 * power_law_stress(A, p); });
  };
  const auto results = run_checks("C01", opt);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_FALSE(results[0].pass);
  EXPECT_GT(results[0].measured, 0.0);
  EXPECT_NE(format_check_line(results[0]).find("FAIL"), std::string::npos);
}

TEST(Checks, LineFormat) {
  CheckResult r;
  r.id = "C99";
  r.suite = "demo";
  r.measured = 0.5;
  r.tolerance = 1.0;
  r.pass = true;
  r.parts = {{"a", 0.5, 1.0, "<="}};
  EXPECT_EQ(format_check_line(r), "C99 demo measured=0.5 <= tolerance=1 PASS a=0.5 seconds=0.0");
}

TEST(Cli, ExitCodes) {
  ScratchDir dir;
  {
    std::ofstream(dir / "ok.ini") << kMinimal;
    std::ofstream(dir / "bad.ini") << "[model]\nkind = newtonian\n";
    std::ofstream(dir / "blow.ini") << kMinimal << "[run]\nblowup_threshold = 0.01\n";
  }
  EXPECT_EQ(run_cli("run " + (dir / "ok.ini") + " --out " + (dir / "out") + " --seed 5"), 0);
  EXPECT_TRUE(fs::exists(dir / "out/diagnostics.csv"));
  EXPECT_EQ(parse_config(dir / "out/config.ini").seed, 5u);
  EXPECT_EQ(run_cli("run " + (dir / "bad.ini")), 2);
  EXPECT_EQ(run_cli("run " + (dir / "blow.ini") + " --out " + (dir / "blow")), 3);
  EXPECT_EQ(run_cli("check --filter rheology --json"), 0);
  EXPECT_EQ(run_cli("check --filter nothing"), 2);
}

TEST(Config, ShippedExamplesParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(RHEOFLOW_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(parse_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 5);
}
