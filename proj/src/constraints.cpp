#include "rheoflow/constraints.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rheoflow/errors.hpp"
#include "rheoflow/log.hpp"

namespace rheoflow {

L2Ball::L2Ball(double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("L2Ball: radius must be positive");
}

VectorField L2Ball::project(const VectorField& v) const {
  const double n = lp_norm(v, 2.0);
  if (n <= radius_) return v;
  return (radius_ / n) * v;
}

bool L2Ball::contains(const VectorField& v, double tol) const { return lp_norm(v, 2.0) <= radius_ * (1.0 + tol); }

PointwiseBall::PointwiseBall(double bound) : bound_(bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("PointwiseBall: bound must be positive");
}

VectorField PointwiseBall::project(const VectorField& v) const {
  VectorField out = v;
  for (std::size_t p = 0; p < v.grid.size(); ++p) {
    double s = 0.0;
    for (int a = 0; a < v.dim(); ++a) s += v[a][p] * v[a][p];
    const double mag = std::sqrt(s);
    if (mag > bound_)
      for (int a = 0; a < v.dim(); ++a) out[a][p] *= bound_ / mag;
  }
  return out;
}

bool PointwiseBall::contains(const VectorField& v, double tol) const { return sup_norm(v) <= bound_ * (1.0 + tol); }

VectorField project(const VectorField& v, const ConvexSet& K) { return K.project(v); }

VectorField penalty(const VectorField& v, const ConvexSet& K) { return v - K.project(v); }

void PenaltyParams::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("penalty strength kappa must be positive");
}

namespace {

Eigen::VectorXd penalty_pairing(const Eigen::VectorXd& c, const BasisSet& basis, const ConvexSet& K) {
  return basis.pair(penalty(basis.reconstruct(c), K));
}

}  // namespace

void penalty_substep(GalerkinState& state, const GramSystem& gram, const ConvexSet& K, double kappa, double dt) {
  PenaltyParams{kappa}.validate();
  const BasisSet& basis = *state.basis;
  const Eigen::VectorXd cstar = state.coeffs;
  const Eigen::VectorXd b0 = penalty_pairing(cstar, basis, K);
  if (b0.cwiseAbs().maxCoeff() == 0.0) return;

  const double scale = (gram.A * cstar).norm() + std::numeric_limits<double>::min();
  auto G = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
    return gram.A * (c - cstar) + dt * kappa * penalty_pairing(c, basis, K);
  };
  Eigen::VectorXd c = cstar;
  Eigen::VectorXd g = gram.A * (c - cstar) + dt * kappa * b0;
  const auto m = c.size();
  for (int it = 0; it < 50 && g.norm() > 1e-13 * scale; ++it) {
    Eigen::MatrixXd J(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(c[j]));
      Eigen::VectorXd cp = c;
      cp[j] += h;
      J.col(j) = (G(cp) - g) / h;
    }
    const Eigen::VectorXd delta = J.partialPivLu().solve(-g);
    double step = 1.0;
    Eigen::VectorXd trial = c + delta, gt = G(trial);
    while (gt.norm() > (1.0 - 1e-4 * step) * g.norm() && step > 1e-6) {
      step *= 0.5;
      trial = c + step * delta;
      gt = G(trial);
    }
    if (gt.norm() >= g.norm()) break;
    c = trial;
    g = gt;
  }
  if (g.norm() > 1e-8 * scale) {
    std::ostringstream os;
    os << "penalty substep did not converge (residual " << g.norm() / scale << ")";
    throw SolverAbort(os.str());
  }
  state.coeffs = c;
}

GalerkinState penalized_momentum_step(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                                      const PowerLawParams& params, const ConvexSet& K, double kappa, double dt,
                                      GalerkinScheme scheme) {
  const GramSystem gram(rho, *state.basis);
  GalerkinState out = momentum_step(state, rho, gram, f, params, dt, scheme);
  penalty_substep(out, gram, K, kappa, dt);
  return out;
}

SemiGalerkinResult run_penalized(SemiGalerkinConfig config, const ConvexSet& K, double kappa,
                                 const ScalarField& rho0, const GalerkinState& state0) {
  PenaltyParams{kappa}.validate();
  config.substep = [&K, kappa](GalerkinState& s, const ScalarField&, const GramSystem& gram, double dt) {
    penalty_substep(s, gram, K, kappa, dt);
  };
  config.extra_power = [&K, kappa](const GalerkinState& s, const ScalarField&) {
    const VectorField u = s.velocity();
    return kappa * l2_inner(penalty(u, K), u);
  };
  return run_semi_galerkin(config, rho0, state0);
}

Eigen::VectorXd project_in_metric(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const BasisSet& basis,
                                  const ConvexSet& K) {
  const auto* ball = dynamic_cast<const L2Ball*>(&K);
  if (!ball) return basis.pair(K.project(basis.reconstruct(c)));
  const double r = ball->radius();
  if (c.norm() <= r) return c;
  // argmin (x-c)^T A (x-c) s.t. |x| <= r: x(l) = (A + l I)^-1 A c with |x(l)| = r.
  // |x(l)| decreases in l; bracket, then bisect.
  const Eigen::VectorXd Ac = A * c;
  auto solve = [&](double l) -> Eigen::VectorXd {
    Eigen::MatrixXd M = A;
    M.diagonal().array() += l;
    return M.llt().solve(Ac);
  };
  double lo = 0.0, hi = 1.0;
  while (solve(hi).norm() > r) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (solve(mid).norm() > r ? lo : hi) = mid;
  }
  return solve(hi);
}

SemiGalerkinResult run_projected(SemiGalerkinConfig config, const ConvexSet& K, const ScalarField& rho0,
                                 const GalerkinState& state0) {
  config.substep = [&K](GalerkinState& s, const ScalarField&, const GramSystem& gram, double) {
    s.coeffs = project_in_metric(s.coeffs, gram.A, *s.basis, K);
  };
  config.extra_power = nullptr;
  return run_semi_galerkin(config, rho0, state0);
}

PenaltyStudy penalty_convergence_study(const SemiGalerkinConfig& config, const ConvexSet& K,
                                       const std::vector<double>& kappas, const ScalarField& rho0,
                                       const GalerkinState& state0, bool with_projection_reference) {
  if (kappas.size() < 3) throw std::invalid_argument("penalty_convergence_study: need at least 3 kappa values");
  for (std::size_t i = 1; i < kappas.size(); ++i)
    if (!(kappas[i] > kappas[i - 1])) throw std::invalid_argument("penalty_convergence_study: kappas must increase");

  std::vector<Eigen::VectorXd> reference;
  if (with_projection_reference) {
    SemiGalerkinConfig rc = config;
    rc.observer = [&](const GalerkinDiagnostics&, const GalerkinState& s, const ScalarField&) {
      reference.push_back(s.coeffs);
    };
    run_projected(rc, K, rho0, state0);
  }

  PenaltyStudy study;
  for (double kappa : kappas) {
    PenaltyStudyRow row;
    row.kappa = kappa;
    std::vector<double> beta_sq, gap_sq;
    SemiGalerkinConfig kc = config;
    kc.observer = [&](const GalerkinDiagnostics& d, const GalerkinState& s, const ScalarField& rho) {
      const VectorField u = s.velocity();
      const double b = lp_norm(penalty(u, K), 2.0);
      beta_sq.push_back(b * b);
      row.constraint_violation_max = std::max(row.constraint_violation_max, b);
      if (with_projection_reference && gap_sq.size() < reference.size())
        gap_sq.push_back((s.coeffs - reference[gap_sq.size()]).squaredNorm());
      if (config.observer) config.observer(d, s, rho);
    };
    SemiGalerkinResult r = run_penalized(kc, K, kappa, rho0, state0);
    auto trapz = [&](const std::vector<double>& y) {
      double acc = 0.0;
      for (std::size_t i = 1; i < y.size(); ++i) acc += 0.5 * config.dt * (y[i] + y[i - 1]);
      return acc;
    };
    row.beta_l2qt_norm = std::sqrt(trapz(beta_sq));
    if (with_projection_reference) row.projection_gap = std::sqrt(trapz(gap_sq));
    row.max_abs_energy_defect = energy_report(r.diagnostics).max_abs_defect;
    study.rows.push_back(row);
  }
  study.strictly_decreasing = true;
  for (std::size_t i = 1; i < study.rows.size(); ++i)
    if (!(study.rows[i].beta_l2qt_norm < study.rows[i - 1].beta_l2qt_norm)) study.strictly_decreasing = false;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : study.rows) {
    if (!(row.beta_l2qt_norm > 0.0)) continue;
    const double x = std::log(row.kappa), y = std::log(row.beta_l2qt_norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n >= 2) study.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return study;
}

TranslationReport time_translation_diagnostic(const std::vector<double>& times, const std::vector<ScalarField>& rho,
                                              const std::vector<VectorField>& u, const std::vector<int>& lags) {
  if (times.size() != rho.size() || times.size() != u.size() || times.size() < 2)
    throw std::invalid_argument("time_translation_diagnostic: inconsistent trajectory");
  const double stride = times[1] - times[0];
  for (std::size_t i = 2; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - stride) > 1e-9 * std::max(1.0, std::abs(stride)))
      throw std::invalid_argument("time_translation_diagnostic: stored times must be uniform");
  TranslationReport rep;
  for (int lag : lags) {
    if (lag < 1 || static_cast<std::size_t>(lag) >= times.size())
      throw std::invalid_argument("time_translation_diagnostic: lag out of range");
    std::vector<double> y;
    for (std::size_t j = 0; j + lag < times.size(); ++j) {
      const VectorField du = u[j + lag] - u[j];
      y.push_back(integrate(hadamard(rho[j + lag], dot(du, du))));
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) acc += 0.5 * stride * (y[i] + y[i - 1]);
    rep.h.push_back(lag * stride);
    rep.integral.push_back(acc);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool all_zero = true;
  for (std::size_t i = 0; i < rep.h.size(); ++i) {
    if (!(rep.integral[i] > 0.0)) continue;
    all_zero = false;
    const double x = std::log(rep.h[i]), yv = std::log(rep.integral[i]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++n;
  }
  if (n >= 2) rep.alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.ok = all_zero || rep.alpha > 0.0;
  return rep;
}

TranslationReport time_translation_diagnostic(const SemiGalerkinResult& run, const std::vector<int>& lags) {
  std::vector<VectorField> u;
  for (const auto& c : run.stored_coeffs) u.push_back(run.state.basis->reconstruct(c));
  return time_translation_diagnostic(run.stored_times, run.stored_rho, u, lags);
}

double monotone_family_excess(const std::vector<double>& times, const std::vector<VectorField>& u,
                              const std::function<double(double)>& radius, int lag) {
  if (times.size() != u.size() || lag < 1) throw std::invalid_argument("monotone_family_excess: bad input");
  std::vector<VectorField> proj;
  for (std::size_t j = 0; j < u.size(); ++j) proj.push_back(L2Ball(radius(times[j])).project(u[j]));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = static_cast<std::size_t>(lag); j < u.size(); ++j) {
    VectorField avg(u[j].grid);
    for (std::size_t i = j - lag; i < j; ++i) {
      const double w = 0.5 * (times[i + 1] - times[i]);
      avg.axpy(w, proj[i]);
      avg.axpy(w, proj[i + 1]);
    }
    avg *= 1.0 / (times[j] - times[j - lag]);
    worst = std::max(worst, lp_norm(avg, 2.0) - radius(times[j]));
  }
  return worst;
}

}  // namespace rheoflow
