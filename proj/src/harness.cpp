#include "rheoflow/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "rheoflow/checkpoint.hpp"
#include "rheoflow/constraints.hpp"
#include "rheoflow/csv.hpp"
#include "rheoflow/errors.hpp"
#include "rheoflow/random.hpp"

namespace rheoflow {

namespace fs = std::filesystem;

const char* const kScenarioNames[5] = {"taylor-green", "shear-layer", "mixing-blob", "vi-ball", "periodic-forcing"};

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ModelKind> kModels[] = {{ModelKind::Newtonian, "newtonian"},
                                           {ModelKind::PowerLaw, "power-law"},
                                           {ModelKind::Graffi, "graffi"},
                                           {ModelKind::FullGks, "full-gks"},
                                           {ModelKind::KS, "ks"}};
constexpr EnumName<DriverKind> kDrivers[] = {
    {DriverKind::Direct, "direct"}, {DriverKind::Periodic, "periodic"}, {DriverKind::Picard, "picard"}};
constexpr EnumName<ConstraintKind> kConstraints[] = {
    {ConstraintKind::None, "none"}, {ConstraintKind::L2Ball, "l2-ball"}, {ConstraintKind::PointwiseBall, "pointwise-ball"}};
constexpr EnumName<ThetaSign> kSigns[] = {{ThetaSign::Canonical, "canonical"}, {ThetaSign::Flipped, "flipped"}};
constexpr EnumName<GalerkinScheme> kSchemes[] = {{GalerkinScheme::IMEX, "imex"}, {GalerkinScheme::RK4, "rk4"}};

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
std::optional<E> enum_value(const EnumName<E> (&table)[N], const std::string& s) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  return std::nullopt;
}

template <class E, std::size_t N>
std::string enum_choices(const EnumName<E> (&table)[N]) {
  std::string out;
  for (const auto& e : table) out += (out.empty() ? "" : "|") + std::string(e.name);
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// One configuration key: parser into the config and printer out of it.
struct KeySpec {
  std::string name;
  std::function<std::optional<std::string>(SimulationConfig&, const std::string&)> set;
  std::function<std::string(const SimulationConfig&)> get;
};

template <class T, class Access>
KeySpec number_key(const char* name, Access access, const char* type_name) {
  return {name,
          [access, name, type_name](SimulationConfig& c, const std::string& v) -> std::optional<std::string> {
            T x{};
            if (!parse_number(v, x)) return std::string(name) + ": expected " + type_name + ", got '" + v + "'";
            access(c) = x;
            return std::nullopt;
          },
          [access](const SimulationConfig& c) {
            SimulationConfig copy = c;
            if constexpr (std::is_floating_point_v<T>)
              return format_shortest(access(copy));
            else
              return std::to_string(access(copy));
          }};
}

template <class E, std::size_t N, class Access>
KeySpec enum_key(const char* name, Access access, const EnumName<E> (&table)[N]) {
  return {name,
          [access, name, &table](SimulationConfig& c, const std::string& v) -> std::optional<std::string> {
            auto e = enum_value(table, v);
            if (!e) return std::string(name) + ": expected one of " + enum_choices(table) + ", got '" + v + "'";
            access(c) = *e;
            return std::nullopt;
          },
          [access, &table](const SimulationConfig& c) {
            SimulationConfig copy = c;
            return std::string(enum_name(table, access(copy)));
          }};
}

KeySpec string_key(const char* name, std::function<std::string&(SimulationConfig&)> access) {
  return {name,
          [access](SimulationConfig& c, const std::string& v) -> std::optional<std::string> {
            access(c) = v;
            return std::nullopt;
          },
          [access](const SimulationConfig& c) {
            SimulationConfig copy = c;
            return access(copy);
          }};
}

#define RF_FIELD(expr) [](SimulationConfig& c) -> auto& { return c.expr; }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> keys = {
      number_key<int>("grid.dim", RF_FIELD(dim), "an integer"),
      number_key<int>("grid.n_points", RF_FIELD(n_points), "an integer"),
      enum_key("model.kind", RF_FIELD(model), kModels),
      number_key<double>("power_law.mu0", RF_FIELD(power_law.mu0), "a real number"),
      number_key<double>("power_law.p", RF_FIELD(power_law.p), "a real number"),
      number_key<double>("mixture.rho10", RF_FIELD(mixture.rho10), "a real number"),
      number_key<double>("mixture.rho20", RF_FIELD(mixture.rho20), "a real number"),
      number_key<double>("mixture.lambda", RF_FIELD(mixture.lambda), "a real number"),
      number_key<double>("mixture.mobility", RF_FIELD(mixture.mobility), "a real number"),
      number_key<double>("mixture.mu", RF_FIELD(mixture.mu), "a real number"),
      number_key<double>("mixture.m_shift", RF_FIELD(mixture.m_shift), "a real number"),
      enum_key("mixture.theta_sign", RF_FIELD(theta_sign), kSigns),
      enum_key("constraint.kind", RF_FIELD(constraint), kConstraints),
      number_key<double>("constraint.radius", RF_FIELD(constraint_radius), "a real number"),
      number_key<double>("constraint.kappa", RF_FIELD(kappa), "a real number"),
      enum_key("driver.kind", RF_FIELD(driver), kDrivers),
      number_key<double>("driver.period", RF_FIELD(period), "a real number"),
      number_key<double>("driver.reg_eps", RF_FIELD(reg_eps), "a real number"),
      number_key<double>("driver.density_lower", RF_FIELD(density_lower), "a real number"),
      number_key<double>("driver.density_upper", RF_FIELD(density_upper), "a real number"),
      number_key<int>("driver.period_steps", RF_FIELD(period_steps), "an integer"),
      number_key<int>("driver.max_iters", RF_FIELD(max_iters), "an integer"),
      number_key<double>("driver.tol", RF_FIELD(tol), "a real number"),
      number_key<double>("driver.ball_radius", RF_FIELD(ball_radius), "a real number"),
      number_key<double>("driver.horizon", RF_FIELD(horizon), "a real number"),
      number_key<int>("driver.max_halvings", RF_FIELD(max_halvings), "an integer"),
      number_key<double>("time.dt", RF_FIELD(dt), "a real number"),
      number_key<double>("time.t_end", RF_FIELD(t_end), "a real number"),
      string_key("scenario.name", RF_FIELD(scenario)),
      number_key<double>("scenario.amplitude", RF_FIELD(amplitude), "a real number"),
      number_key<int>("scenario.modes", RF_FIELD(modes), "an integer"),
      enum_key("scenario.scheme", RF_FIELD(scheme), kSchemes),
      string_key("output.directory", RF_FIELD(output_dir)),
      number_key<int>("output.stride", RF_FIELD(stride), "an integer"),
      number_key<int>("output.checkpoint_stride", RF_FIELD(checkpoint_stride), "an integer"),
      number_key<std::uint64_t>("run.seed", RF_FIELD(seed), "a nonnegative integer"),
      number_key<double>("run.blowup_threshold", RF_FIELD(blowup_threshold), "a real number"),
  };
  return keys;
}

#undef RF_FIELD

const char* const kRequired[] = {"model.kind", "time.dt", "time.t_end", "scenario.name"};

[[noreturn]] void throw_config(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw ConfigError(msg);
}

}  // namespace

const char* to_string(ModelKind m) { return enum_name(kModels, m); }
const char* to_string(DriverKind d) { return enum_name(kDrivers, d); }
const char* to_string(ConstraintKind c) { return enum_name(kConstraints, c); }

GksModel SimulationConfig::gks_model() const {
  GksModel m;
  m.variant = model == ModelKind::Graffi ? GksVariant::Graffi : model == ModelKind::KS ? GksVariant::KS : GksVariant::Full;
  m.sign = theta_sign;
  return m;
}

void SimulationConfig::validate() const {
  std::vector<std::string> err;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) err.push_back(msg);
  };
  need(dim == 2 || dim == 3, "grid.dim must be 2 or 3");
  need(n_points >= 8 && n_points % 2 == 0, "grid.n_points must be an even integer >= 8");
  need(dt > 0.0 && std::isfinite(dt), "time.dt must be positive");
  need(t_end > 0.0 && std::isfinite(t_end), "time.t_end must be positive");
  need(power_law.p > 1.0, "power_law.p must satisfy p > 1");
  need(power_law.mu0 > 0.0, "power_law.mu0 must be positive");
  if (model == ModelKind::Newtonian) need(power_law.p == 2.0, "model newtonian requires power_law.p = 2");
  if (is_gks()) {
    try {
      mixture.validate();
    } catch (const std::invalid_argument& e) {
      err.push_back(std::string("mixture: ") + e.what());
    }
    if (model == ModelKind::KS)
      need(mixture.mobility == 0.0, "model ks requires mixture.mobility = 0 (the KS relation has no mobility term)");
  }
  if (constraint != ConstraintKind::None) {
    need(!is_gks(), "constraint is only supported for the newtonian and power-law models");
    need(driver == DriverKind::Direct, "constraint requires driver.kind = direct");
    need(constraint_radius > 0.0, "constraint.radius must be positive");
    need(kappa > 0.0, "constraint.kappa must be positive");
  }
  if (driver == DriverKind::Periodic) {
    need(!is_gks(), "driver periodic is only supported for the newtonian and power-law models");
    need(period > 0.0, "driver.period must be positive");
    need(reg_eps > 0.0, "driver.reg_eps must be positive");
    need(density_lower > 0.0 && density_upper >= density_lower, "driver density bounds need 0 < lower <= upper");
    need(period_steps >= 1, "driver.period_steps must be >= 1");
  }
  if (driver != DriverKind::Direct) {
    need(max_iters >= 1, "driver.max_iters must be >= 1");
    need(tol > 0.0, "driver.tol must be positive");
  }
  if (driver == DriverKind::Picard) {
    need(ball_radius > 0.0, "driver.ball_radius must be positive");
    need(horizon > 0.0, "driver.horizon must be positive");
    need(max_halvings >= 0, "driver.max_halvings must be >= 0");
  }
  bool known = false;
  for (const char* s : kScenarioNames) known = known || scenario == s;
  need(known, "scenario.name must be one of taylor-green|shear-layer|mixing-blob|vi-ball|periodic-forcing, got '" +
                  scenario + "'");
  if (scenario == "vi-ball")
    need(constraint != ConstraintKind::None || driver != DriverKind::Direct || is_gks(),
         "scenario vi-ball needs constraint.kind (l2-ball or pointwise-ball)");
  need(modes >= 1, "scenario.modes must be >= 1");
  need(std::isfinite(amplitude), "scenario.amplitude must be finite");
  need(stride >= 1, "output.stride must be >= 1");
  need(checkpoint_stride >= 0, "output.checkpoint_stride must be >= 0");
  need(blowup_threshold > 0.0, "run.blowup_threshold must be positive");
  if (!err.empty()) throw_config(err);
}

SimulationConfig parse_config_string(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::map<std::string, const KeySpec*> keys;
  for (const auto& k : key_table()) keys[k.name] = &k;

  SimulationConfig c;
  std::vector<std::string> err;
  std::map<std::string, bool> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      err.push_back("key '" + section + "' appears outside any section");
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = keys.find(full);
      if (it == keys.end()) {
        err.push_back("unknown key '" + full + "'");
        continue;
      }
      if (auto e = it->second->set(c, trim(value.data()))) err.push_back(*e);
      seen[full] = true;
    }
  }
  for (const char* r : kRequired)
    if (!seen.count(r)) err.push_back(std::string("missing required key '") + r + "'");
  if (!err.empty()) throw_config(err);
  c.validate();
  return c;
}

SimulationConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

std::string to_ini(const SimulationConfig& c) {
  std::string out, section;
  for (const auto& k : key_table()) {
    const auto dot = k.name.find('.');
    const std::string s = k.name.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += k.name.substr(dot + 1) + " = " + k.get(c) + "\n";
  }
  return out;
}

std::string diagnostics_schema_line(const SimulationConfig& c) {
  return std::string("# schema=rheoflow-diagnostics/1 model=") + to_string(c.model) + " driver=" + to_string(c.driver) +
         " scenario=" + c.scenario;
}

// ---------------------------------------------------------------------------
// Scenarios

ScenarioSetup build_scenario(const SimulationConfig& c) {
  using std::numbers::pi;
  const Grid g(c.dim, c.n_points);
  const double A = c.amplitude;
  ScenarioSetup s;
  s.u0 = VectorField(g);
  if (c.scenario == "taylor-green") {
    s.rho0 = ScalarField(g, 1.0);
    s.u0 = sample_vector(g, [A](const Point& x) {
      return Point{A * std::sin(x[0]) * std::cos(x[1]), -A * std::cos(x[0]) * std::sin(x[1]), 0.0};
    });
  } else if (c.scenario == "shear-layer") {
    const double delta = 0.3;
    s.rho0 = sample(g, [](const Point& x) { return 1.0 + 0.25 * std::cos(x[1]); });
    VectorField base = sample_vector(g, [&](const Point& x) {
      const double ux = x[1] <= pi ? std::tanh((x[1] - 0.5 * pi) / delta) : std::tanh((1.5 * pi - x[1]) / delta);
      return Point{A * ux, 0.05 * A * std::sin(x[0]), 0.0};
    });
    base += random_solenoidal_field(g, c.seed, 4, 0.02 * std::abs(A));
    s.u0 = leray_project(base);
  } else if (c.scenario == "mixing-blob") {
    const double lo = c.mixture.rho20, gap = c.mixture.rho10 - c.mixture.rho20;
    ScalarField bump = random_smooth_field(g, c.seed, 3, 0.05);
    s.rho0 = sample(g, [&](const Point& x) {
      const double r2 = (x[0] - pi) * (x[0] - pi) + (x[1] - pi) * (x[1] - pi);
      return lo + gap * (0.15 + 0.7 * std::exp(-r2 / 0.8));
    });
    for (std::size_t p = 0; p < s.rho0.size(); ++p) s.rho0[p] += gap * bump[p];
    s.u0 = random_solenoidal_field(g, c.seed + 1, 3, std::abs(A));
  } else if (c.scenario == "vi-ball") {
    s.rho0 = sample(g, [](const Point& x) { return 1.0 + 0.3 * std::sin(x[0]); });
    const VectorField push = (5.0 * A) * build_basis(g, 1)->mode_field(0);
    s.forcing = [push](double) { return push; };
  } else if (c.scenario == "periodic-forcing") {
    s.rho0 = sample(g, [](const Point& x) { return 1.0 + 0.2 * std::sin(x[0]); });
    auto b = build_basis(g, 4);
    const VectorField w0 = b->mode_field(0), w3 = b->mode_field(3);
    const double T = c.period;
    s.forcing = [w0, w3, A, T](double t) {
      return (A * std::sin(2.0 * pi * t / T)) * w0 + (0.5 * A * std::cos(2.0 * pi * t / T)) * w3;
    };
  } else {
    throw ConfigError("unknown scenario '" + c.scenario + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

const std::vector<std::string> kGalerkinColumns = {
    "time",        "energy",         "dissipation",   "dissipation_integral", "work",    "work_integral",
    "extra_power", "extra_integral", "energy_defect", "mass",                 "rho_min", "rho_max",
    "rho_l2",      "coeff_max"};

const std::vector<std::string> kGksColumns = {
    "time",          "energy",   "dissipation",   "dissipation_integral", "work",       "work_integral",
    "extra_power",   "extra_integral", "energy_defect", "theta_l2",       "korteweg_work", "mean_rho",
    "rho_bar_min",   "rho_min",  "rho_max",       "u_max"};

const std::vector<std::string> kIterationColumns = {"iter", "residual", "contraction_ratio", "horizon"};

std::vector<double> galerkin_row(const GalerkinDiagnostics& d) {
  return {d.time,        d.energy,         d.dissipation,   d.dissipation_integral, d.work,    d.work_integral,
          d.extra_power, d.extra_integral, d.energy_defect, d.mass,                 d.rho_min, d.rho_max,
          d.rho_l2,      d.coeff_max};
}

std::vector<double> gks_row(const GksDiagnostics& d) {
  return {d.time,         d.energy,   d.dissipation,   d.dissipation_integral, d.work,          d.work_integral,
          d.extra_power,  d.extra_integral, d.energy_defect, d.theta_l2,       d.korteweg_work, d.mean_rho,
          d.rho_bar_min,  d.rho_min,  d.rho_max,       d.u_max};
}

void write_iteration_rows(CsvWriter& csv, const std::vector<IterationRecord>& log) {
  for (const auto& r : log) csv.row({static_cast<double>(r.iter), r.residual, r.contraction_ratio, r.horizon});
}

ScalarField constant_field(const Grid& g, double v) { return ScalarField(g, v); }

ScalarField padded_coeffs(const Grid& g, const Eigen::VectorXd& c) {
  if (static_cast<std::size_t>(c.size()) > g.size()) throw std::logic_error("too many coefficients for a checkpoint");
  ScalarField f(g);
  for (Eigen::Index i = 0; i < c.size(); ++i) f[static_cast<std::size_t>(i)] = c[i];
  return f;
}

void add_velocity(Checkpoint& cp, const VectorField& u) {
  static const char* names[3] = {"u0", "u1", "u2"};
  for (int a = 0; a < u.dim(); ++a) cp.fields.emplace_back(names[a], u[a]);
}

VectorField read_velocity(const Checkpoint& cp) {
  static const char* names[3] = {"u0", "u1", "u2"};
  VectorField u(cp.grid);
  for (int a = 0; a < cp.grid.dim; ++a) u[a] = cp.get(names[a]);
  return u;
}

std::string checkpoint_name(long long step) { return "checkpoint_" + std::to_string(step) + ".bin"; }

std::unique_ptr<ConvexSet> make_constraint(const SimulationConfig& c) {
  switch (c.constraint) {
    case ConstraintKind::L2Ball:
      return std::make_unique<L2Ball>(c.constraint_radius);
    case ConstraintKind::PointwiseBall:
      return std::make_unique<PointwiseBall>(c.constraint_radius);
    case ConstraintKind::None:
      break;
  }
  return nullptr;
}

struct DirectStart {
  ScalarField rho;
  VectorField u;
  Eigen::VectorXd coeffs;
  double time = 0.0;
  long long step = 0;
  std::optional<DensityBounds> clamp;
};

RunSummary run_direct(const SimulationConfig& c, const ScenarioSetup& sc, DirectStart start, const fs::path& out) {
  RunSummary sum;
  sum.output_dir = out.string();
  const long long total = std::max<long long>(1, std::llround(c.t_end / c.dt));
  const long long remaining = total - start.step;
  if (remaining <= 0) {
    sum.steps = 0;
    sum.final_time = start.time;
    return sum;
  }
  const Grid g = start.rho.grid;
  CsvWriter csv((out / "diagnostics.csv").string(), diagnostics_schema_line(c),
                c.is_gks() ? kGksColumns : kGalerkinColumns);
  long long step = start.step;
  auto due = [&](long long s, long long every) { return every > 0 && s % every == 0; };
  auto save = [&](const std::string& name, const ScalarField& rho, const VectorField& u, const Eigen::VectorXd* coeffs,
                  double t, long long s) {
    Checkpoint cp;
    cp.grid = g;
    cp.fields.emplace_back("rho", rho);
    add_velocity(cp, u);
    if (coeffs) cp.fields.emplace_back("coeffs", padded_coeffs(g, *coeffs));
    cp.fields.emplace_back("time", constant_field(g, t));
    cp.fields.emplace_back("step", constant_field(g, static_cast<double>(s)));
    if (start.clamp) {
      cp.fields.emplace_back("clamp_lo", constant_field(g, start.clamp->lower));
      cp.fields.emplace_back("clamp_hi", constant_field(g, start.clamp->upper));
    }
    save_checkpoint((out / name).string(), cp);
  };

  if (c.is_gks()) {
    GksConfig gc;
    gc.params = c.mixture;
    gc.model = c.gks_model();
    gc.dt = c.dt;
    gc.t_end = static_cast<double>(remaining) * c.dt;
    gc.start_time = start.time;
    gc.forcing = sc.forcing;
    gc.blowup_threshold = c.blowup_threshold;
    bool first = true;
    gc.observer = [&](const GksDiagnostics& d, const VectorField& u, const ScalarField& rho) {
      if (!first) ++step;
      first = false;
      if (step % c.stride == 0 || step == total) csv.row(gks_row(d));
      if (step != start.step && due(step, c.checkpoint_stride)) save(checkpoint_name(step), rho, u, nullptr, d.time, step);
    };
    GksResult r = run_gks(gc, start.rho, start.u);
    save("checkpoint_final.bin", r.rho, r.u, nullptr, r.diagnostics.back().time, step);
    sum.final_time = r.diagnostics.back().time;
  } else {
    auto basis = build_basis(g, static_cast<std::size_t>(c.modes));
    SemiGalerkinConfig gc;
    gc.params = c.power_law;
    gc.dt = c.dt;
    gc.t_end = static_cast<double>(remaining) * c.dt;
    gc.scheme = c.scheme;
    gc.forcing = sc.forcing;
    gc.blowup_threshold = c.blowup_threshold;
    gc.advect.clamp = start.clamp;
    gc.clamp_to_initial_bounds = false;
    bool first = true;
    gc.observer = [&](const GalerkinDiagnostics& d, const GalerkinState& s, const ScalarField& rho) {
      if (!first) ++step;
      first = false;
      if (step % c.stride == 0 || step == total) csv.row(galerkin_row(d));
      if (step != start.step && due(step, c.checkpoint_stride))
        save(checkpoint_name(step), rho, s.velocity(), &s.coeffs, s.time, step);
    };
    const GalerkinState s0{start.coeffs.size() ? start.coeffs : basis->pair(start.u), basis, start.time};
    SemiGalerkinResult r;
    if (auto K = make_constraint(c))
      r = run_penalized(gc, *K, c.kappa, start.rho, s0);
    else
      r = run_semi_galerkin(gc, start.rho, s0);
    save("checkpoint_final.bin", r.rho, r.state.velocity(), &r.state.coeffs, r.state.time, step);
    sum.final_time = r.state.time;
  }
  sum.steps = step - start.step;
  return sum;
}

RunSummary run_periodic(const SimulationConfig& c, const ScenarioSetup& sc, const fs::path& out) {
  const Grid g = sc.rho0.grid;
  PeriodicProblem pb;
  pb.period = c.period;
  pb.forcing = sc.forcing;
  pb.alpha = c.density_lower;
  pb.beta = c.density_upper;
  pb.reg_eps = c.reg_eps;
  PeriodicConfig pc;
  pc.basis = build_basis(g, static_cast<std::size_t>(c.modes));
  pc.params = c.power_law;
  pc.steps = c.period_steps;
  pc.max_iters = c.max_iters;
  pc.tol = c.tol;
  pc.rho_start = sc.rho0;
  pc.c_start = pc.basis->pair(sc.u0);
  CsvWriter csv((out / "diagnostics.csv").string(), diagnostics_schema_line(c), kIterationColumns);
  PeriodicResult r;
  try {
    r = periodic_solve(pb, pc);
  } catch (const FixedPointAbort& e) {
    write_iteration_rows(csv, e.log);
    throw;
  }
  write_iteration_rows(csv, r.log);
  Checkpoint cp;
  cp.grid = g;
  cp.fields.emplace_back("rho", r.rho);
  add_velocity(cp, pc.basis->reconstruct(r.coeffs));
  cp.fields.emplace_back("coeffs", padded_coeffs(g, r.coeffs));
  save_checkpoint((out / "checkpoint_final.bin").string(), cp);
  RunSummary sum;
  sum.output_dir = out.string();
  sum.iterations = r.iterations;
  sum.converged = r.converged;
  sum.final_time = c.period;
  return sum;
}

RunSummary run_picard(const SimulationConfig& c, const ScenarioSetup& sc, const fs::path& out) {
  const Grid g = sc.rho0.grid;
  auto basis = build_basis(g, static_cast<std::size_t>(c.modes));
  std::unique_ptr<PicardSystem> sys;
  if (c.is_gks())
    sys = std::make_unique<GksPicard>(basis, sc.rho0, sc.forcing, c.mixture, c.gks_model());
  else
    sys = std::make_unique<PowerLawPicard>(basis, sc.rho0, sc.forcing, c.power_law);
  PicardConfig pc;
  pc.ball_radius = c.ball_radius;
  pc.horizon = c.horizon;
  pc.max_iters = c.max_iters;
  pc.tol = c.tol;
  pc.dt = c.dt;
  pc.max_halvings = c.max_halvings;
  CsvWriter csv((out / "diagnostics.csv").string(), diagnostics_schema_line(c), kIterationColumns);
  PicardResult r;
  try {
    r = picard_G(pc, *sys, {});
  } catch (const FixedPointAbort& e) {
    write_iteration_rows(csv, e.log);
    throw;
  }
  write_iteration_rows(csv, r.log);
  Checkpoint cp;
  cp.grid = g;
  cp.fields.emplace_back("rho", r.limit.rho.back());
  add_velocity(cp, basis->reconstruct(r.limit.coeffs.back()));
  cp.fields.emplace_back("coeffs", padded_coeffs(g, r.limit.coeffs.back()));
  cp.fields.emplace_back("time", constant_field(g, r.horizon));
  save_checkpoint((out / "checkpoint_final.bin").string(), cp);
  RunSummary sum;
  sum.output_dir = out.string();
  sum.iterations = static_cast<int>(r.log.size());
  sum.converged = r.converged;
  sum.final_time = r.horizon;
  return sum;
}

fs::path prepare_output(const SimulationConfig& c, const std::string& dir) {
  fs::path out(dir);
  fs::create_directories(out);
  std::ofstream cfg(out / "config.ini");
  if (!cfg) throw std::runtime_error("cannot write " + (out / "config.ini").string());
  cfg << to_ini(c);
  return out;
}

}  // namespace

RunSummary run_simulation(const SimulationConfig& c) {
  c.validate();
  const ScenarioSetup sc = build_scenario(c);
  const fs::path out = prepare_output(c, c.output_dir);
  switch (c.driver) {
    case DriverKind::Periodic:
      return run_periodic(c, sc, out);
    case DriverKind::Picard:
      return run_picard(c, sc, out);
    case DriverKind::Direct:
      break;
  }
  DirectStart start;
  start.rho = sc.rho0;
  start.u = sc.u0;
  if (!c.is_gks()) start.clamp = DensityBounds{min_value(sc.rho0), max_value(sc.rho0)};
  return run_direct(c, sc, std::move(start), out);
}

RunSummary resume_simulation(const std::string& checkpoint_path, const std::string& out_dir) {
  const fs::path ck(checkpoint_path);
  const fs::path dir = ck.has_parent_path() ? ck.parent_path() : fs::path(".");
  SimulationConfig c = parse_config((dir / "config.ini").string());
  if (c.driver != DriverKind::Direct) throw ConfigError("resume supports only driver.kind = direct");
  Checkpoint cp = load_checkpoint(checkpoint_path);
  if (cp.grid.dim != c.dim || cp.grid.n != c.n_points) throw ConfigError("checkpoint grid does not match config.ini");
  for (const char* f : {"rho", "time", "step"})
    if (!cp.has(f)) throw ConfigError(std::string("checkpoint lacks field '") + f + "'");
  DirectStart start;
  start.rho = cp.get("rho");
  start.u = read_velocity(cp);
  start.time = cp.get("time")[0];
  start.step = std::llround(cp.get("step")[0]);
  if (cp.has("clamp_lo")) start.clamp = DensityBounds{cp.get("clamp_lo")[0], cp.get("clamp_hi")[0]};
  if (!c.is_gks()) {
    if (!cp.has("coeffs")) throw ConfigError("checkpoint lacks field 'coeffs'");
    const ScalarField& pc = cp.get("coeffs");
    start.coeffs = Eigen::VectorXd(c.modes);
    for (int i = 0; i < c.modes; ++i) start.coeffs[i] = pc[static_cast<std::size_t>(i)];
  }
  c.output_dir = out_dir.empty() ? (dir / "resume").string() : out_dir;
  const ScenarioSetup sc = build_scenario(c);
  const fs::path out = prepare_output(c, c.output_dir);
  return run_direct(c, sc, std::move(start), out);
}

}  // namespace rheoflow
