#include "rheoflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rheoflow/log.hpp"

namespace rheoflow {

void DiffusionParams::validate() const {
  if (!(lambda >= 0.0) || !(mobility >= 0.0) || !(reg_eps >= 0.0))
    throw std::invalid_argument("diffusion parameters must be nonnegative");
}

void DensityBounds::validate() const {
  if (!(lower >= 0.0) || !(upper >= lower)) throw std::invalid_argument("density bounds need 0 <= lower <= upper");
}

bool DensityBounds::contains(const ScalarField& rho, double tol) const {
  return min_value(rho) >= lower - tol && max_value(rho) <= upper + tol;
}

double cfl_number(const VectorField& u, double dt) { return sup_norm(u) * dt / u.grid.spacing(); }

ScalarField advect_step(const ScalarField& rho, const VectorInterpolant& u, double dt, const AdvectOptions& opt) {
  require_same_grid(rho.grid, u.grid(), "advect_step");
  if (!(dt > 0.0)) throw std::invalid_argument("advect_step: dt must be positive");
  const Grid& g = rho.grid;
  const double cfl = u.sup_norm() * dt / g.spacing();
  if (cfl > 1.0) {
    std::ostringstream os;
    os << "advect_step: CFL number " << cfl << " exceeds 1 (characteristics remain stable)";
    warn(os.str());
  }
  if (u.sup_norm() == 0.0) return rho;
  Interpolant ri(rho, opt.method);
  ScalarField out(g);
  const int d = g.dim;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.position(i);
    auto shifted = [&](const Point& k, double c) {
      Point y = x;
      for (int a = 0; a < d; ++a) y[a] -= c * k[a];
      return y;
    };
    const Point k1 = u(x);
    const Point k2 = u(shifted(k1, 0.5 * dt));
    const Point k3 = u(shifted(k2, 0.5 * dt));
    const Point k4 = u(shifted(k3, dt));
    Point foot = x;
    for (int a = 0; a < d; ++a) foot[a] -= dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    out[i] = opt.clamp ? std::clamp(ri(foot), opt.clamp->lower, opt.clamp->upper) : ri(foot);
  }
  return out;
}

ScalarField advect_step(const ScalarField& rho, const VectorField& u, double dt, const AdvectOptions& opt) {
  return advect_step(rho, VectorInterpolant(u, opt.method), dt, opt);
}

double fd_laplacian_symbol(const Grid& g, const std::array<int, 3>& k) {
  const double h = g.spacing();
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const double v = std::sin(std::numbers::pi * k[a] / g.n);
    s += v * v;
  }
  return -4.0 / (h * h) * s;
}

ScalarField regularized_continuity_step(const ScalarField& rho, const ScalarField& rho_prev,
                                        const VectorInterpolant* u, double eps, double dt) {
  require_same_grid(rho.grid, rho_prev.grid, "regularized_continuity_step");
  if (!(eps > 0.0)) throw std::invalid_argument("regularized_continuity_step: eps must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("regularized_continuity_step: dt must be positive");
  // Clamping the advected field to the range of rho keeps the maximum
  // principle exact; the parabolic term smooths the O(h^2) cut at extrema.
  const AdvectOptions opt{InterpMethod::Cubic, DensityBounds{min_value(rho), max_value(rho)}};
  ScalarField star = u ? advect_step(rho, *u, dt, opt) : rho;
  star.axpy(dt, rho_prev);
  Spectrum s = to_spectral(star);
  const ModeTable& t = mode_table(rho.grid);
  for (std::size_t i = 0; i < t.count; ++i)
    s[i] /= 1.0 + dt - dt * eps * fd_laplacian_symbol(rho.grid, t.k[i]);
  return to_physical(s);
}

ScalarField regularized_continuity_step(const ScalarField& rho, const ScalarField& rho_prev, const VectorField& u,
                                        double eps, double dt) {
  if (sup_norm(u) == 0.0) return regularized_continuity_step(rho, rho_prev, nullptr, eps, dt);
  VectorInterpolant ui(u);
  return regularized_continuity_step(rho, rho_prev, &ui, eps, dt);
}

namespace {

// -FFT(psi . grad rho), dealiased, zero mode removed.
Spectrum advection_term(const Spectrum& rho_hat, const VectorField& psi) {
  const Grid& g = rho_hat.grid;
  ScalarField acc(g);
  for (int a = 0; a < g.dim; ++a) {
    ScalarField da = to_physical(derivative(rho_hat, a));
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] -= psi[a][p] * da[p];
  }
  Spectrum s = to_spectral(acc);
  dealias(s);
  s[0] = 0.0;
  return s;
}

}  // namespace

ScalarField kss_diffusion_step(const ScalarField& rho, const VectorField& psi, const DiffusionParams& params,
                               double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("kss_diffusion_step: dt must be positive");
  params.validate();
  require_same_grid(rho.grid, psi.grid, "kss_diffusion_step");
  const Grid& g = rho.grid;
  const ModeTable& t = mode_table(g);
  Spectrum v = to_spectral(rho);
  std::vector<double> e1(t.count), e2(t.count);
  for (std::size_t i = 0; i < t.count; ++i) {
    const double L = -params.lambda * (t.k2[i] + params.mobility * t.k2[i] * t.k2[i]);
    e1[i] = std::exp(0.5 * dt * L);
    e2[i] = e1[i] * e1[i];
  }
  const bool advect = sup_norm(psi) > 0.0;
  if (!advect) {
    for (std::size_t i = 0; i < t.count; ++i) v[i] *= e2[i];
    return to_physical(v);
  }
  const cplx v0 = v[0];
  Spectrum k1 = advection_term(v, psi);
  k1 *= dt;
  Spectrum w(g);
  for (std::size_t i = 0; i < t.count; ++i) w[i] = e1[i] * (v[i] + 0.5 * k1[i]);
  Spectrum k2 = advection_term(w, psi);
  k2 *= dt;
  for (std::size_t i = 0; i < t.count; ++i) w[i] = e1[i] * v[i] + 0.5 * k2[i];
  Spectrum k3 = advection_term(w, psi);
  k3 *= dt;
  for (std::size_t i = 0; i < t.count; ++i) w[i] = e2[i] * v[i] + e1[i] * k3[i];
  Spectrum k4 = advection_term(w, psi);
  k4 *= dt;
  for (std::size_t i = 0; i < t.count; ++i)
    v[i] = e2[i] * v[i] + (e2[i] * k1[i] + 2.0 * e1[i] * (k2[i] + k3[i]) + k4[i]) / 6.0;
  v[0] = v0;
  return to_physical(v);
}

namespace {

double spectral_moment(const Spectrum& s, int power) {
  const ModeTable& t = mode_table(s.grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < t.count; ++i) acc += t.weight[i] * std::pow(t.k2[i], power) * std::norm(s[i]);
  return acc * s.grid.volume();
}

// Cumulative trapezoid of y over t.
std::vector<double> cumtrapz(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

double grad_sup(const VectorField& psi) {
  auto g = velocity_gradient(psi);
  double m = 0.0;
  for (std::size_t p = 0; p < psi.grid.size(); ++p) {
    double s = 0.0;
    for (int i = 0; i < psi.dim(); ++i)
      for (int j = 0; j < psi.dim(); ++j) s += g[i][j][p] * g[i][j][p];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

void finish_level(LadderLevel& lv, double slack) {
  lv.max_ratio = 0.0;
  for (std::size_t i = 0; i < lv.lhs.size(); ++i) {
    const double tiny = 1e-14 * std::max(1.0, std::abs(lv.majorant[0]));
    if (lv.majorant[i] > 0.0) lv.max_ratio = std::max(lv.max_ratio, lv.lhs[i] / lv.majorant[i]);
    if (lv.lhs[i] > lv.majorant[i] * (1.0 + slack) + tiny) lv.flagged = true;
  }
}

// Majorant of y' <= a y + b: e^{A(t)} (y0 + int e^{-A} b).
std::vector<double> gronwall(const std::vector<double>& t, double y0, const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> A = cumtrapz(t, a);
  std::vector<double> eb(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) eb[i] = std::exp(-A[i]) * b[i];
  std::vector<double> I = cumtrapz(t, eb);
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::exp(A[i]) * (y0 + I[i]);
  return out;
}

}  // namespace

LadderReport diffusion_estimate_ladder(const std::vector<double>& times, const std::vector<ScalarField>& rho,
                                       const std::vector<VectorField>& psi, const DiffusionParams& params,
                                       double slack) {
  if (times.size() != rho.size() || times.size() < 2) throw std::invalid_argument("ladder: need >= 2 stored states");
  if (psi.size() != 1 && psi.size() != times.size()) throw std::invalid_argument("ladder: psi count mismatch");
  if (!(params.lambda > 0.0)) throw std::invalid_argument("ladder: lambda must be positive");
  const std::size_t n = times.size();
  const double lam = params.lambda, dm = params.mobility;
  LadderReport rep;
  rep.times = times;
  std::vector<double> k8(n), k10(n);
  std::vector<double> a0(n), a1(n), a2(n), dpsi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Spectrum s = to_spectral(rho[i]);
    rep.rho_l2sq.push_back(spectral_moment(s, 0));
    rep.grad_l2sq.push_back(spectral_moment(s, 1));
    rep.lap_l2sq.push_back(spectral_moment(s, 2));
    rep.gradlap_l2sq.push_back(spectral_moment(s, 3));
    k8[i] = spectral_moment(s, 4);
    k10[i] = spectral_moment(s, 5);
    if (psi.size() == n || i == 0) {
      const VectorField& ps = psi.size() == n ? psi[i] : psi[0];
      a0[i] = sup_norm(ps);
      a1[i] = grad_sup(ps);
      a2[i] = sup_norm(laplacian(ps));
    } else {
      a0[i] = a0[0];
      a1[i] = a1[0];
      a2[i] = a2[0];
    }
  }
  if (psi.size() == n)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == n ? i : i + 1;
      dpsi[i] = sup_norm(psi[hi] - psi[lo]) / (times[hi] - times[lo]);
    }

  std::vector<double> tmp(n);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = rep.grad_l2sq[i] + rep.lap_l2sq[i];
  rep.h1h2_integral = cumtrapz(times, tmp);

  auto dissipated = [&](const std::vector<double>& x, double cx, const std::vector<double>& y, double cy) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = cx * x[i] + cy * y[i];
    return cumtrapz(times, r);
  };

  {  // level 0: |rho|^2 + 2 lam int(|grad rho|^2 + Dm |Lap rho|^2) = |rho0|^2
    LadderLevel lv;
    lv.name = "L0 |rho|^2";
    auto I = dissipated(rep.grad_l2sq, 2 * lam, rep.lap_l2sq, 2 * lam * dm);
    for (std::size_t i = 0; i < n; ++i) {
      lv.lhs.push_back(rep.rho_l2sq[i] + I[i]);
      lv.majorant.push_back(rep.rho_l2sq[0]);
    }
    finish_level(lv, slack);
    rep.levels.push_back(lv);
  }
  {  // level 1: (|psi|^2_inf / lam) Gronwall
    LadderLevel lv;
    lv.name = "L1 |grad rho|^2";
    auto I = dissipated(rep.lap_l2sq, lam, rep.gradlap_l2sq, 2 * lam * dm);
    std::vector<double> a(n), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i] = a0[i] * a0[i] / lam;
    lv.majorant = gronwall(times, rep.grad_l2sq[0], a, b);
    for (std::size_t i = 0; i < n; ++i) lv.lhs.push_back(rep.grad_l2sq[i] + I[i]);
    finish_level(lv, slack);
    rep.levels.push_back(lv);
  }
  {  // level 2
    LadderLevel lv;
    lv.name = "L2 |Lap rho|^2";
    auto I = dissipated(rep.gradlap_l2sq, lam, k8, 2 * lam * dm);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 2.0 * a0[i] * a0[i] / lam;
      b[i] = 2.0 * a1[i] * a1[i] * rep.grad_l2sq[i] / lam;
    }
    lv.majorant = gronwall(times, rep.lap_l2sq[0], a, b);
    for (std::size_t i = 0; i < n; ++i) lv.lhs.push_back(rep.lap_l2sq[i] + I[i]);
    finish_level(lv, slack);
    rep.levels.push_back(lv);
  }
  {  // level 3
    LadderLevel lv;
    lv.name = "L3 |grad Lap rho|^2";
    auto I = dissipated(k8, lam, k10, 2 * lam * dm);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 3.0 * a0[i] * a0[i] / lam;
      b[i] = 3.0 * (a2[i] * a2[i] * rep.grad_l2sq[i] + 4.0 * a1[i] * a1[i] * rep.lap_l2sq[i]) / lam;
    }
    lv.majorant = gronwall(times, rep.gradlap_l2sq[0], a, b);
    for (std::size_t i = 0; i < n; ++i) lv.lhs.push_back(rep.gradlap_l2sq[i] + I[i]);
    finish_level(lv, slack);
    rep.levels.push_back(lv);
  }
  if (n >= 3) {  // level 4: eta = d_t rho by central differences, |eta(t)| <= |eta(t1)| + int |d_t psi|_inf |grad rho|
    LadderLevel lv;
    lv.name = "L4 |d_t rho|^2";
    std::vector<double> eta(n - 2), tt(n - 2), src(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      ScalarField d = rho[i + 1] - rho[i - 1];
      eta[i - 1] = lp_norm(d, 2.0) / (times[i + 1] - times[i - 1]);
      tt[i - 1] = times[i];
      src[i - 1] = dpsi[i] * std::sqrt(rep.grad_l2sq[i]);
    }
    auto I = cumtrapz(tt, src);
    for (std::size_t i = 0; i < eta.size(); ++i) {
      lv.lhs.push_back(eta[i] * eta[i]);
      const double m = eta[0] + I[i];
      lv.majorant.push_back(m * m);
    }
    finish_level(lv, slack);
    rep.levels.push_back(lv);
  }
  for (const auto& lv : rep.levels) rep.any_flag = rep.any_flag || lv.flagged;
  return rep;
}

DensityInvariantReport density_invariants(const std::vector<ScalarField>& rho_series) {
  DensityInvariantReport r;
  if (rho_series.empty()) return r;
  r.overall_min = min_value(rho_series[0]);
  r.overall_max = max_value(rho_series[0]);
  for (const auto& rho : rho_series) {
    r.mass.push_back(integrate(rho));
    r.l1.push_back(lp_norm(rho, 1.0));
    r.l2.push_back(lp_norm(rho, 2.0));
    r.l4.push_back(lp_norm(rho, 4.0));
    r.min.push_back(min_value(rho));
    r.max.push_back(max_value(rho));
    r.overall_min = std::min(r.overall_min, r.min.back());
    r.overall_max = std::max(r.overall_max, r.max.back());
  }
  auto drift = [](const std::vector<double>& v) {
    double m = 0.0;
    const double ref = std::abs(v[0]) > 0.0 ? std::abs(v[0]) : 1.0;
    for (double x : v) m = std::max(m, std::abs(x - v[0]) / ref);
    return m;
  };
  r.max_mass_drift = drift(r.mass);
  r.max_l1_drift = drift(r.l1);
  r.max_l2_drift = drift(r.l2);
  r.max_l4_drift = drift(r.l4);
  return r;
}

}  // namespace rheoflow
