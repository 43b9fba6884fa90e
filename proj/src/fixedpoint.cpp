#include "rheoflow/fixedpoint.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rheoflow/csv.hpp"
#include "rheoflow/log.hpp"
#include "rheoflow/spectral.hpp"

namespace rheoflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField fd_laplacian(const ScalarField& f) {
  Spectrum s = to_spectral(f);
  const ModeTable& t = mode_table(f.grid);
  for (std::size_t i = 0; i < t.count; ++i) s[i] *= fd_laplacian_symbol(f.grid, t.k[i]);
  return to_physical(s);
}

void check_bounds(const ScalarField& rho, const PeriodicProblem& pb, double tol, const char* what) {
  const double lo = min_value(rho), hi = max_value(rho);
  if (lo < pb.alpha - tol || hi > pb.beta + tol) {
    std::ostringstream os;
    os << what << ": density range [" << lo << ", " << hi << "] leaves [" << pb.alpha << ", " << pb.beta << "]";
    throw SolverAbort(os.str());
  }
}

VectorField forcing_at(const PeriodicProblem& pb, const Grid& g, double t) {
  return pb.forcing ? pb.forcing(t) : VectorField(g);
}

// One implicit momentum step of
//   rho d_t u + rho (u_prev.grad) u + (1/2) S u = div 2T(u) + rho f,  S = eps Lap_h rho - rho + rho_prev,
// with the Gram matrix and S at the new density, mu0 Lap and S u implicit.
Eigen::VectorXd periodic_momentum_step(const Eigen::VectorXd& c, const ScalarField& rho1, const ScalarField& rho_prev1,
                                       const VectorField& u_prev, const VectorField& f, const PeriodicProblem& pb,
                                       const PeriodicConfig& cfg, double dt) {
  const BasisSet& basis = *cfg.basis;
  ScalarField S = pb.reg_eps * fd_laplacian(rho1);
  S -= rho1;
  S += rho_prev1;
  const Eigen::MatrixXd A = gram_matrix(rho1, basis);
  const Eigen::VectorXd L = basis.laplacian_diagonal();
  const double mu0 = cfg.params.mu0;
  Eigen::VectorXd H = transport_rhs(u_prev, c, basis, rho1);
  H += basis.pair(stress_divergence_direct(basis.reconstruct_spectral(c), cfg.params));
  H -= mu0 * L.cwiseProduct(c);
  H += basis.pair(scale(rho1, f));
  Eigen::MatrixXd M = A / dt + 0.5 * weighted_mass_matrix(S, basis);
  M.diagonal() -= mu0 * L;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SolverAbort("periodic momentum step: system matrix is not positive definite");
  return ldlt.solve(A * c / dt + H);
}

VectorField lagged_velocity(const PeriodicTrajectory& lagged, const BasisSet& basis, int n) {
  return basis.reconstruct(lagged.coeffs[static_cast<std::size_t>(n)]);
}

void require_lagged(const PeriodicTrajectory& lagged, int steps) {
  const auto need = static_cast<std::size_t>(steps) + 1;
  if (lagged.rho.size() != need || lagged.coeffs.size() != need)
    throw std::invalid_argument("lagged trajectory must hold steps + 1 samples");
}

}  // namespace

void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << "iter,residual,contraction_ratio,horizon\n";
  for (const auto& r : log)
    os << r.iter << ',' << format_shortest(r.residual) << ',' << format_shortest(r.contraction_ratio) << ',' << format_shortest(r.horizon)
       << '\n';
}

void PeriodicProblem::validate() const {
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  if (!(alpha > 0.0) || !(beta >= alpha)) throw std::invalid_argument("density bounds need 0 < alpha <= beta");
  if (!(reg_eps > 0.0)) throw std::invalid_argument("reg_eps must be positive");
}

void PeriodicConfig::validate() const {
  if (!basis) throw std::invalid_argument("periodic config needs a basis");
  params.validate();
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (c_start.size() != 0 && static_cast<std::size_t>(c_start.size()) != basis->size())
    throw std::invalid_argument("c_start size does not match the basis");
  if (!rho_start.values.empty()) require_same_grid(rho_start.grid, basis->grid(), "PeriodicConfig");
}

ScalarField map_S(const ScalarField& rho0, const PeriodicProblem& pb, int steps, const LaggedFields& lagged) {
  pb.validate();
  if (steps < 1) throw std::invalid_argument("map_S: steps must be positive");
  if (!lagged.density) throw std::invalid_argument("map_S: lagged density is required");
  if (min_value(rho0) < pb.alpha || max_value(rho0) > pb.beta)
    throw std::invalid_argument("map_S: initial density outside [alpha, beta]");
  const double dt = pb.period / steps;
  ScalarField rho = rho0;
  for (int n = 0; n < steps; ++n) {
    const ScalarField prev = lagged.density(n + 1);
    if (lagged.velocity)
      rho = regularized_continuity_step(rho, prev, lagged.velocity(n), pb.reg_eps, dt);
    else
      rho = regularized_continuity_step(rho, prev, nullptr, pb.reg_eps, dt);
  }
  check_bounds(rho, pb, 1e-8, "map_S");
  return rho;
}

PeriodicTrajectory periodic_pass(const ScalarField& rho0, const Eigen::VectorXd& c0, const PeriodicProblem& pb,
                                 const PeriodicConfig& cfg, const PeriodicTrajectory& lagged) {
  require_lagged(lagged, cfg.steps);
  const BasisSet& basis = *cfg.basis;
  const double dt = pb.period / cfg.steps;
  PeriodicTrajectory out;
  out.rho.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  out.coeffs.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  out.rho.push_back(rho0);
  out.coeffs.push_back(c0);
  for (int n = 0; n < cfg.steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const VectorField up = lagged_velocity(lagged, basis, n);
    const ScalarField& prev1 = lagged.rho[i + 1];
    ScalarField rho1 = regularized_continuity_step(out.rho[i], prev1, up, pb.reg_eps, dt);
    const VectorField f = forcing_at(pb, basis.grid(), n * dt);
    Eigen::VectorXd c1 = periodic_momentum_step(out.coeffs[i], rho1, prev1, up, f, pb, cfg, dt);
    if (!c1.allFinite()) throw SolverAbort("periodic pass: non-finite velocity coefficients");
    out.rho.push_back(std::move(rho1));
    out.coeffs.push_back(std::move(c1));
  }
  check_bounds(out.rho.back(), pb, 1e-8, "periodic pass");
  return out;
}

Eigen::VectorXd map_Z(const Eigen::VectorXd& c0, const PeriodicTrajectory& path, const PeriodicProblem& pb,
                      const PeriodicConfig& cfg, const PeriodicTrajectory& lagged) {
  require_lagged(lagged, cfg.steps);
  if (path.rho.size() != lagged.rho.size()) throw std::invalid_argument("map_Z: density path has the wrong length");
  const double dt = pb.period / cfg.steps;
  Eigen::VectorXd c = c0;
  for (int n = 0; n < cfg.steps; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const VectorField up = lagged_velocity(lagged, *cfg.basis, n);
    c = periodic_momentum_step(c, path.rho[i + 1], lagged.rho[i + 1], up, forcing_at(pb, cfg.basis->grid(), n * dt),
                               pb, cfg, dt);
  }
  return c;
}

double periodic_distance(const ScalarField& rho_a, const Eigen::VectorXd& c_a, const ScalarField& rho_b,
                         const Eigen::VectorXd& c_b, const BasisSet& basis) {
  const VectorField ua = basis.reconstruct(c_a), ub = basis.reconstruct(c_b);
  VectorField m(ua.grid);
  for (int a = 0; a < ua.dim(); ++a)
    for (std::size_t p = 0; p < rho_a.size(); ++p)
      m[a][p] = std::sqrt(rho_a[p]) * ua[a][p] - std::sqrt(rho_b[p]) * ub[a][p];
  return lp_norm(rho_a - rho_b, 2.0) + lp_norm(m, 2.0);
}

PeriodicResult periodic_solve(const PeriodicProblem& pb, const PeriodicConfig& cfg) {
  pb.validate();
  cfg.validate();
  const BasisSet& basis = *cfg.basis;
  const Grid& g = basis.grid();
  const double dt = pb.period / cfg.steps;

  ScalarField rho = cfg.rho_start.values.empty() ? ScalarField(g, 0.5 * (pb.alpha + pb.beta)) : cfg.rho_start;
  Eigen::VectorXd c = cfg.c_start.size() ? cfg.c_start : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  if (min_value(rho) < pb.alpha || max_value(rho) > pb.beta)
    throw std::invalid_argument("periodic_solve: initial density outside [alpha, beta]");

  PeriodicTrajectory lagged;
  lagged.rho.assign(static_cast<std::size_t>(cfg.steps) + 1, rho);
  lagged.coeffs.assign(static_cast<std::size_t>(cfg.steps) + 1, c);

  PeriodicResult res;
  ScalarField rho_old;
  Eigen::VectorXd c_old;
  double prev_residual = kNaN, z_max = 0.0;
  int non_contracting = 0;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    res.max_start_energy = std::max(res.max_start_energy, integrate(hadamard(rho, dot(basis.reconstruct(c), basis.reconstruct(c)))));
    PeriodicTrajectory traj = periodic_pass(rho, c, pb, cfg, lagged);
    const ScalarField& rho_new = traj.rho.back();
    const Eigen::VectorXd& c_new = traj.coeffs.back();
    IterationRecord rec;
    rec.iter = k;
    rec.horizon = pb.period;
    rec.residual = periodic_distance(rho_new, c_new, rho, c, basis);
    rec.contraction_ratio = rec.residual / prev_residual;
    rec.s_ratio = kNaN;
    rec.z_ratio = kNaN;
    if (cfg.measure_maps && k >= 2) {
      const double drho = lp_norm(rho - rho_old, 2.0);
      if (drho > 0.0) {
        LaggedFields lf;
        lf.velocity = [&](int n) { return lagged_velocity(lagged, basis, n); };
        lf.density = [&](int n) { return lagged.rho[static_cast<std::size_t>(n)]; };
        rec.s_ratio = lp_norm(rho_new - map_S(rho_old, pb, cfg.steps, lf), 2.0) / drho;
      }
      if ((c - c_old).norm() > 0.0) {
        const Eigen::VectorXd cz = map_Z(c_old, traj, pb, cfg, lagged);
        const double before = std::sqrt(integrate(hadamard(rho, dot(basis.reconstruct(c - c_old), basis.reconstruct(c - c_old)))));
        const VectorField dT = basis.reconstruct(c_new - cz);
        rec.z_ratio = std::sqrt(integrate(hadamard(rho_new, dot(dT, dT)))) / before;
        z_max = std::max(z_max, rec.z_ratio);
      }
    }
    res.log.push_back(rec);
    non_contracting = (k >= 2 && !(rec.contraction_ratio < 1.0)) ? non_contracting + 1 : 0;
    rho_old = rho;
    c_old = c;
    rho = rho_new;
    c = c_new;
    lagged = std::move(traj);
    res.iterations = k;
    if (rec.residual <= cfg.tol) {
      res.converged = true;
      break;
    }
    if (non_contracting >= 5)
      throw FixedPointAbort("periodic_solve: contraction ratio >= 1 for 5 consecutive iterations", res.log);
    prev_residual = rec.residual;
  }
  res.rho = rho;
  res.coeffs = c;

  const PeriodicTrajectory replay = periodic_pass(rho, c, pb, cfg, lagged);
  res.replay_mismatch = periodic_distance(replay.rho.back(), replay.coeffs.back(), rho, c, basis);

  double forcing_integral = 0.0;
  for (int n = 0; n < cfg.steps; ++n) {
    const VectorField rf = scale(lagged.rho[static_cast<std::size_t>(n)], forcing_at(pb, g, n * dt));
    forcing_integral += dt * integrate(dot(rf, rf));
  }
  if (z_max > 0.0 && z_max < 1.0) {
    res.z_rate = -2.0 * std::log(z_max) / pb.period;
    res.ball_radius_required = forcing_integral / (1.0 - z_max * z_max);
  } else {
    res.ball_radius_required = z_max >= 1.0 ? std::numeric_limits<double>::infinity() : forcing_integral;
  }
  res.trajectory = std::move(lagged);
  return res;
}

// ---------------------------------------------------------------------------

void PicardConfig::validate() const {
  if (!(ball_radius > 0.0)) throw std::invalid_argument("ball_radius must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(dt > 0.0) || dt > horizon) throw std::invalid_argument("dt must lie in (0, horizon]");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be nonnegative");
}

double path_distance(const CoeffPath& a, const CoeffPath& b, double dt) {
  if (a.size() != b.size()) throw std::invalid_argument("path_distance: paths differ in length");
  double s = 0.0;
  for (std::size_t n = 1; n < a.size(); ++n) s += dt * (a[n] - b[n]).squaredNorm();
  return std::sqrt(s);
}

double path_ball_norm(const CoeffPath& u, const BasisSet& basis, double dt) {
  const Eigen::VectorXd w = (1.0 - basis.laplacian_diagonal().array()).square().matrix();
  double h2 = 0.0, dtn = 0.0;
  for (std::size_t n = 1; n < u.size(); ++n) {
    h2 += dt * u[n].cwiseProduct(u[n]).dot(w);
    dtn += (u[n] - u[n - 1]).squaredNorm() / dt;
  }
  return std::max(std::sqrt(h2), std::sqrt(dtn));
}

PowerLawPicard::PowerLawPicard(std::shared_ptr<const BasisSet> basis, ScalarField rho0,
                               std::function<VectorField(double)> forcing, PowerLawParams params)
    : basis_(std::move(basis)), rho0_(std::move(rho0)), forcing_(std::move(forcing)), params_(params) {
  if (!basis_) throw std::invalid_argument("PowerLawPicard: basis is required");
  require_same_grid(rho0_.grid, basis_->grid(), "PowerLawPicard");
  params_.validate();
  if (!(min_value(rho0_) > 0.0)) throw std::invalid_argument("PowerLawPicard: rho0 must be bounded below by m > 0");
}

double PowerLawPicard::smallness() const {
  return 2.0 * cbar * std::max(std::abs(1.0 - min_value(rho0_)), std::abs(1.0 - max_value(rho0_)));
}

std::vector<ScalarField> PowerLawPicard::transport(const CoeffPath& v, double dt) const {
  AdvectOptions opt;
  opt.clamp = DensityBounds{min_value(rho0_), max_value(rho0_)};
  std::vector<ScalarField> rho;
  rho.reserve(v.size());
  rho.push_back(rho0_);
  for (std::size_t n = 0; n + 1 < v.size(); ++n) rho.push_back(advect_step(rho[n], basis_->reconstruct(v[n]), dt, opt));
  return rho;
}

PicardIterate PowerLawPicard::apply(const CoeffPath& v, double dt) const {
  if (v.empty() || v[0].norm() != 0.0) throw std::invalid_argument("PowerLawPicard: v must start at 0");
  const BasisSet& b = *basis_;
  const Eigen::VectorXd L = b.laplacian_diagonal();
  const double mu0 = params_.mu0;
  PicardIterate out;
  out.rho = transport(v, dt);
  out.coeffs.reserve(v.size());
  out.coeffs.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size())));
  for (std::size_t n = 0; n + 1 < v.size(); ++n) {
    const ScalarField& r1 = out.rho[n + 1];
    const VectorField vn = b.reconstruct(v[n]);
    VectorField F = b.reconstruct((v[n + 1] - v[n]) / dt);
    for (int a = 0; a < F.dim(); ++a)
      for (std::size_t p = 0; p < r1.size(); ++p) F[a][p] *= 1.0 - r1[p];
    if (forcing_) F += scale(r1, forcing_(static_cast<double>(n) * dt));
    const Eigen::VectorXd& c = out.coeffs[n];
    Eigen::VectorXd g = b.pair(F) + transport_rhs(vn, v[n], b, r1);
    g += b.pair(frozen_stress_divergence(vn, b.reconstruct_spectral(c), params_)) - mu0 * L.cwiseProduct(c);
    Eigen::VectorXd next = (c / dt + g).array() / (1.0 / dt - mu0 * L.array());
    out.coeffs.push_back(std::move(next));
  }
  return out;
}

double PowerLawPicard::residual(const CoeffPath& u, double dt) const {
  const BasisSet& b = *basis_;
  const Eigen::VectorXd L = b.laplacian_diagonal();
  const double mu0 = params_.mu0;
  const std::vector<ScalarField> rho = transport(u, dt);
  double s = 0.0;
  for (std::size_t n = 0; n + 1 < u.size(); ++n) {
    const ScalarField& r1 = rho[n + 1];
    const VectorField un = b.reconstruct(u[n]);
    VectorField F = scale(r1, b.reconstruct((u[n + 1] - u[n]) / dt));
    if (forcing_) F -= scale(r1, forcing_(static_cast<double>(n) * dt));
    Eigen::VectorXd R = b.pair(F) - transport_rhs(un, u[n], b, r1);
    R -= b.pair(frozen_stress_divergence(un, b.reconstruct_spectral(u[n]), params_));
    R -= mu0 * L.cwiseProduct(u[n + 1] - u[n]);
    s += dt * R.squaredNorm();
  }
  return std::sqrt(s);
}

PicardResult picard_G(const PicardConfig& cfg, const PicardSystem& system, const CoeffPath& start) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(system.basis().size());
  PicardResult res;
  res.smallness = system.smallness();
  double horizon = cfg.horizon;
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
    const int steps = std::max(1, static_cast<int>(std::lround(horizon / cfg.dt)));
    const auto len = static_cast<std::size_t>(steps) + 1;
    if (res.smallness >= 1.0)
      warn("picard_G: smallness indicator 2 cbar sup|1 - rho0| = " + std::to_string(res.smallness) + " is not below 1");
    CoeffPath v(len, Eigen::VectorXd::Zero(m));
    for (std::size_t n = 0; n < std::min(len, start.size()); ++n) v[n] = start[n];
    if (v[0].norm() != 0.0) throw std::invalid_argument("picard_G: the start path must vanish at t = 0");

    bool left_ball = false;
    double prev = kNaN;
    PicardIterate it;
    for (int k = 1; k <= cfg.max_iters; ++k) {
      it = system.apply(v, cfg.dt);
      const double d = path_distance(it.coeffs, v, cfg.dt);
      res.log.push_back({k, d, d / prev, horizon, kNaN, kNaN});
      prev = d;
      if (!std::isfinite(d) || path_ball_norm(it.coeffs, system.basis(), cfg.dt) > cfg.ball_radius) {
        left_ball = true;
        break;
      }
      v = it.coeffs;
      if (d <= cfg.tol) {
        res.residual = system.residual(it.coeffs, cfg.dt);
        if (res.residual <= 10.0 * cfg.tol) {
          res.converged = true;
          break;
        }
      }
    }
    if (!left_ball) {
      if (!res.converged) res.residual = system.residual(it.coeffs, cfg.dt);
      res.limit = std::move(it);
      res.horizon = horizon;
      return res;
    }
    if (attempt == cfg.max_halvings) break;
    horizon *= 0.5;
    ++res.halvings;
    res.smallness = system.smallness();
  }
  throw FixedPointAbort("picard_G: iterates leave the ball after the allowed horizon halvings", res.log);
}

}  // namespace rheoflow
