#include "rheoflow/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "rheoflow/errors.hpp"
#include "rheoflow/parallel.hpp"

namespace rheoflow {

namespace {

Point normalized(Point v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& x : v) x /= n;
  return v;
}

Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

bool in_half_space(const std::array<int, 3>& k) {
  for (int v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;
}

std::vector<BasisMode> enumerate_modes(const Grid& g, int kcap) {
  const double unit = 2.0 * std::numbers::pi / g.length;
  std::vector<BasisMode> out;
  const int zc = g.dim == 3 ? kcap : 0;
  for (int a = -kcap; a <= kcap; ++a)
    for (int b = -kcap; b <= kcap; ++b)
      for (int c = -zc; c <= zc; ++c) {
        std::array<int, 3> k{a, b, c};
        if (!in_half_space(k)) continue;
        const Point kp{unit * a, unit * b, unit * c};
        const double k2 = kp[0] * kp[0] + kp[1] * kp[1] + kp[2] * kp[2];
        if (g.dim == 2) {
          const Point e = normalized({-kp[1], kp[0], 0.0});
          for (int pol = 0; pol < 2; ++pol) out.push_back({k, pol, e, pol == 1, k2});
        } else {
          int axis = 0;
          for (int ax = 1; ax < 3; ++ax)
            if (std::abs(k[ax]) < std::abs(k[axis])) axis = ax;
          Point ea{0.0, 0.0, 0.0};
          ea[axis] = 1.0;
          const Point e1 = normalized(cross(kp, ea));
          const Point e2 = cross(normalized(kp), e1);
          for (int pol = 0; pol < 4; ++pol) out.push_back({k, pol, pol < 2 ? e1 : e2, pol % 2 == 1, k2});
        }
      }
  std::sort(out.begin(), out.end(), [](const BasisMode& x, const BasisMode& y) {
    const long long nx = 1LL * x.k[0] * x.k[0] + 1LL * x.k[1] * x.k[1] + 1LL * x.k[2] * x.k[2];
    const long long ny = 1LL * y.k[0] * y.k[0] + 1LL * y.k[1] * y.k[1] + 1LL * y.k[2] * y.k[2];
    if (nx != ny) return nx < ny;
    if (x.k != y.k) return x.k < y.k;
    return x.polarization < y.polarization;
  });
  return out;
}

}  // namespace

BasisSet::BasisSet(const Grid& g, std::vector<BasisMode> modes) : grid_(g), modes_(std::move(modes)) {
  g.validate();
  if (modes_.empty()) throw std::invalid_argument("BasisSet: no modes");
}

VectorSpectrum BasisSet::reconstruct_spectral(const Eigen::VectorXd& c) const {
  if (static_cast<std::size_t>(c.size()) != modes_.size()) throw std::invalid_argument("reconstruct: size mismatch");
  VectorSpectrum s(grid_);
  const double amp = std::sqrt(2.0 / grid_.volume()) / 2.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (c[i] == 0.0) continue;
    const BasisMode& m = modes_[i];
    const cplx value = m.is_sine ? cplx(0.0, -amp * c[i]) : cplx(amp * c[i], 0.0);
    for (int a = 0; a < grid_.dim; ++a)
      if (m.e[a] != 0.0) add_real_mode(s[a], m.k, value * m.e[a]);
  }
  return s;
}

VectorField BasisSet::reconstruct(const Eigen::VectorXd& c) const { return to_physical(reconstruct_spectral(c)); }

VectorField BasisSet::mode_field(std::size_t i) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  c[static_cast<Eigen::Index>(i)] = 1.0;
  return reconstruct(c);
}

Eigen::VectorXd BasisSet::pair(const VectorSpectrum& F_hat) const {
  Eigen::VectorXd H(static_cast<Eigen::Index>(modes_.size()));
  const double scale = std::sqrt(2.0 / grid_.volume()) * grid_.volume();
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const BasisMode& m = modes_[i];
    cplx z = 0.0;
    for (int a = 0; a < grid_.dim; ++a)
      if (m.e[a] != 0.0) z += m.e[a] * coefficient(F_hat[a], m.k);
    H[static_cast<Eigen::Index>(i)] = scale * (m.is_sine ? -z.imag() : z.real());
  }
  return H;
}

Eigen::VectorXd BasisSet::pair(const VectorField& F) const { return pair(to_spectral(F)); }

Eigen::VectorXd BasisSet::laplacian_diagonal() const {
  Eigen::VectorXd L(static_cast<Eigen::Index>(modes_.size()));
  for (std::size_t i = 0; i < modes_.size(); ++i) L[static_cast<Eigen::Index>(i)] = -modes_[i].k2;
  return L;
}

std::shared_ptr<const BasisSet> build_basis(const Grid& g, std::size_t m) {
  g.validate();
  if (m < 1) throw std::invalid_argument("build_basis: m must be >= 1");
  std::vector<BasisMode> all = enumerate_modes(g, g.n / 3);
  if (m > all.size()) {
    std::ostringstream os;
    os << "build_basis: " << m << " modes exceed the " << all.size() << " resolvable on an n=" << g.n << " grid";
    throw std::invalid_argument(os.str());
  }
  all.resize(m);
  return std::make_shared<const BasisSet>(g, std::move(all));
}

std::shared_ptr<const BasisSet> build_basis_cutoff(const Grid& g, double kmax) {
  g.validate();
  const double unit = 2.0 * std::numbers::pi / g.length;
  const int kc = static_cast<int>(std::floor(kmax / unit + 1e-12));
  if (kc < 1) throw std::invalid_argument("build_basis_cutoff: cutoff below the first shell");
  if (kc > g.n / 3) throw std::invalid_argument("build_basis_cutoff: cutoff exceeds the resolvable band n/3");
  std::vector<BasisMode> all = enumerate_modes(g, kc), kept;
  for (const auto& m : all)
    if (m.k2 <= kmax * kmax * (1 + 1e-12)) kept.push_back(m);
  return std::make_shared<const BasisSet>(g, std::move(kept));
}

Eigen::MatrixXd gram_matrix(const ScalarField& rho, const BasisSet& basis) {
  require_same_grid(rho.grid, basis.grid(), "gram_matrix");
  const double rmin = min_value(rho);
  if (!(rmin > 0.0)) {
    std::ostringstream os;
    os << "gram_matrix: density must be positive (min " << rmin << ")";
    throw std::domain_error(os.str());
  }
  return weighted_mass_matrix(rho, basis);
}

Eigen::MatrixXd weighted_mass_matrix(const ScalarField& weight, const BasisSet& basis) {
  require_same_grid(weight.grid, basis.grid(), "weighted_mass_matrix");
  const Spectrum r = to_spectral(weight);
  const std::size_t m = basis.size();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  parallel_for(m, [&](std::size_t i) {
    const BasisMode& a = basis.mode(i);
    for (std::size_t j = i; j < m; ++j) {
      const BasisMode& b = basis.mode(j);
      const double ee = a.e[0] * b.e[0] + a.e[1] * b.e[1] + a.e[2] * b.e[2];
      double v = 0.0;
      if (ee != 0.0) {
        std::array<int, 3> kp{}, km{};
        for (int d = 0; d < 3; ++d) {
          kp[d] = a.k[d] + b.k[d];
          km[d] = a.k[d] - b.k[d];
        }
        const cplx rp = coefficient(r, kp), rm = coefficient(r, km);
        // Product-to-sum: integral rho cos(q.x) = V Re r_q, integral rho sin(q.x) = -V Im r_q.
        if (!a.is_sine && !b.is_sine) v = 0.5 * (rm.real() + rp.real());
        else if (a.is_sine && b.is_sine) v = 0.5 * (rm.real() - rp.real());
        else if (!a.is_sine && b.is_sine) v = 0.5 * (rm.imag() - rp.imag());
        else v = -0.5 * (rp.imag() + rm.imag());
        v *= 2.0 * ee;
      }
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  });
  return A;
}

GramSystem::GramSystem(const ScalarField& rho, const BasisSet& basis) : A(gram_matrix(rho, basis)), llt(A) {
  if (llt.info() != Eigen::Success) throw std::domain_error("gram_matrix: Cholesky factorization failed");
}

namespace {

// u . grad u on the grid from the spectrum of u (no dealiasing: the pairing
// with band-limited modes is exact for the product as sampled).
VectorField convective_term(const VectorSpectrum& u_hat, const VectorField& u) {
  const int d = u.dim();
  VectorField conv(u.grid);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      ScalarField dj = to_physical(derivative(u_hat[i], j));
      for (std::size_t p = 0; p < dj.size(); ++p) conv[i][p] += u[j][p] * dj[p];
    }
  return conv;
}

Eigen::VectorXd full_rhs(const Eigen::VectorXd& c, const BasisSet& basis, const ScalarField& rho,
                         const VectorField* f, const PowerLawParams& params, bool divide_by_rho) {
  const VectorSpectrum u_hat = basis.reconstruct_spectral(c);
  const VectorField u = to_physical(u_hat);
  VectorField F = convective_term(u_hat, u);
  F *= -1.0;
  if (f) F += *f;
  if (!divide_by_rho) {
    for (int a = 0; a < u.dim(); ++a)
      for (std::size_t p = 0; p < rho.size(); ++p) F[a][p] *= rho[p];
    return basis.pair(F) + basis.pair(stress_divergence_direct(u_hat, params));
  }
  VectorField S = to_physical(stress_divergence_direct(u_hat, params));
  for (int a = 0; a < u.dim(); ++a)
    for (std::size_t p = 0; p < rho.size(); ++p) F[a][p] += S[a][p] / rho[p];
  return basis.pair(F);
}

}  // namespace

Eigen::VectorXd convection_rhs(const Eigen::VectorXd& c, const BasisSet& basis, const ScalarField& rho) {
  const VectorSpectrum u_hat = basis.reconstruct_spectral(c);
  const VectorField u = to_physical(u_hat);
  VectorField F = convective_term(u_hat, u);
  for (int a = 0; a < u.dim(); ++a)
    for (std::size_t p = 0; p < rho.size(); ++p) F[a][p] *= -rho[p];
  return basis.pair(F);
}

Eigen::VectorXd transport_rhs(const VectorField& a, const Eigen::VectorXd& c, const BasisSet& basis,
                              const ScalarField& rho) {
  require_same_grid(a.grid, basis.grid(), "transport_rhs");
  const VectorSpectrum u_hat = basis.reconstruct_spectral(c);
  const int d = a.dim();
  VectorField F(a.grid);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      ScalarField dj = to_physical(derivative(u_hat[i], j));
      for (std::size_t p = 0; p < dj.size(); ++p) F[i][p] -= rho[p] * a[j][p] * dj[p];
    }
  return basis.pair(F);
}

Eigen::VectorXd assemble_rhs(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                             const PowerLawParams& params) {
  require_same_grid(rho.grid, state.basis->grid(), "assemble_rhs");
  return full_rhs(state.coeffs, *state.basis, rho, f, params, false);
}

GalerkinState momentum_step(const GalerkinState& state, const ScalarField& rho, const GramSystem& gram,
                            const VectorField* f, const PowerLawParams& params, double dt, GalerkinScheme scheme) {
  if (!(dt > 0.0)) throw std::invalid_argument("momentum_step: dt must be positive");
  const BasisSet& basis = *state.basis;
  GalerkinState out = state;
  out.time = state.time + dt;
  const Eigen::VectorXd& c = state.coeffs;
  switch (scheme) {
    case GalerkinScheme::RK4: {
      auto rate = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return gram.llt.solve(full_rhs(x, basis, rho, f, params, false));
      };
      const Eigen::VectorXd k1 = rate(c);
      const Eigen::VectorXd k2 = rate(c + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = rate(c + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = rate(c + dt * k3);
      out.coeffs = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      break;
    }
    case GalerkinScheme::IMEX: {
      const Eigen::VectorXd L = basis.laplacian_diagonal();
      const Eigen::VectorXd H = full_rhs(c, basis, rho, f, params, false);
      Eigen::MatrixXd M = gram.A / dt;
      M.diagonal() -= params.mu0 * L;
      const Eigen::VectorXd rhs = gram.A * c / dt + H - params.mu0 * L.cwiseProduct(c);
      Eigen::LLT<Eigen::MatrixXd> llt(M);
      if (llt.info() != Eigen::Success) throw std::domain_error("momentum_step: IMEX matrix not positive definite");
      out.coeffs = llt.solve(rhs);
      break;
    }
    case GalerkinScheme::Collocation: {
      auto rate = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return full_rhs(x, basis, rho, f, params, true);
      };
      const Eigen::VectorXd k1 = rate(c);
      const Eigen::VectorXd k2 = rate(c + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = rate(c + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = rate(c + dt * k3);
      out.coeffs = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      break;
    }
  }
  return out;
}

GalerkinState momentum_step(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                            const PowerLawParams& params, double dt, GalerkinScheme scheme) {
  require_same_grid(rho.grid, state.basis->grid(), "momentum_step");
  const GramSystem gram(rho, *state.basis);
  return momentum_step(state, rho, gram, f, params, dt, scheme);
}

double kinetic_energy(const GalerkinState& state, const ScalarField& rho) {
  const VectorField u = state.velocity();
  return integrate(hadamard(rho, dot(u, u)));
}

GalerkinDiagnostics instant_diagnostics(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                                        const PowerLawParams& params) {
  GalerkinDiagnostics d;
  d.time = state.time;
  const VectorField u = state.velocity();
  d.energy = integrate(hadamard(rho, dot(u, u)));
  d.dissipation = dissipation(u, params);
  if (f) d.work = integrate(hadamard(rho, dot(*f, u)));
  d.mass = integrate(rho);
  d.rho_min = min_value(rho);
  d.rho_max = max_value(rho);
  d.rho_l2 = lp_norm(rho, 2.0);
  d.coeff_max = state.coeffs.size() ? state.coeffs.cwiseAbs().maxCoeff() : 0.0;
  return d;
}

SemiGalerkinResult run_semi_galerkin(const SemiGalerkinConfig& cfg, const ScalarField& rho0,
                                     const GalerkinState& state0) {
  cfg.params.validate();
  if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0)) throw std::invalid_argument("run_semi_galerkin: dt and t_end must be positive");
  require_same_grid(rho0.grid, state0.basis->grid(), "run_semi_galerkin");
  if (!(min_value(rho0) > 0.0)) throw SolverAbort("run_semi_galerkin: initial density must be positive");

  AdvectOptions adv = cfg.advect;
  if (cfg.clamp_to_initial_bounds && !adv.clamp) adv.clamp = DensityBounds{min_value(rho0), max_value(rho0)};

  SemiGalerkinResult res;
  res.rho = rho0;
  res.state = state0;
  const double t0 = state0.time;
  const long long steps = std::max<long long>(1, std::llround(cfg.t_end / cfg.dt));

  auto forcing_at = [&](double t, VectorField& buf) -> const VectorField* {
    if (!cfg.forcing) return nullptr;
    buf = cfg.forcing(t);
    return &buf;
  };
  auto store = [&](long long n) {
    if (cfg.store_stride > 0 && n % cfg.store_stride == 0) {
      res.stored_times.push_back(res.state.time);
      res.stored_rho.push_back(res.rho);
      res.stored_coeffs.push_back(res.state.coeffs);
    }
  };

  VectorField fbuf;
  GalerkinDiagnostics d = instant_diagnostics(res.state, res.rho, forcing_at(t0, fbuf), cfg.params);
  if (cfg.extra_power) d.extra_power = cfg.extra_power(res.state, res.rho);
  const double E0 = d.energy;
  res.diagnostics.push_back(d);
  store(0);
  if (cfg.observer) cfg.observer(d, res.state, res.rho);

  for (long long n = 0; n < steps; ++n) {
    const double t = t0 + n * cfg.dt;
    const VectorInterpolant u_now(res.state.velocity(), adv.method);
    if (cfg.splitting == Splitting::Lie) {
      res.rho = advect_step(res.rho, u_now, cfg.dt, adv);
    } else {
      res.rho = advect_step(res.rho, u_now, 0.5 * cfg.dt, adv);
    }
    std::optional<GramSystem> gram;
    try {
      gram.emplace(res.rho, *res.state.basis);
    } catch (const std::domain_error& e) {
      throw SolverAbort(std::string("run_semi_galerkin: ") + e.what());
    }
    const double tf = cfg.scheme == GalerkinScheme::IMEX ? t : t + 0.5 * cfg.dt;
    res.state = momentum_step(res.state, res.rho, *gram, forcing_at(tf, fbuf), cfg.params, cfg.dt, cfg.scheme);
    if (cfg.substep) cfg.substep(res.state, res.rho, *gram, cfg.dt);
    if (cfg.splitting == Splitting::Strang) {
      const VectorInterpolant u_new(res.state.velocity(), adv.method);
      res.rho = advect_step(res.rho, u_new, 0.5 * cfg.dt, adv);
    }
    res.state.time = t0 + (n + 1) * cfg.dt;

    const double cmax = res.state.coeffs.cwiseAbs().maxCoeff();
    if (!std::isfinite(cmax) || cmax > cfg.blowup_threshold) {
      std::ostringstream os;
      os << "blow-up guard: |c|_inf = " << cmax << " at t = " << res.state.time;
      throw SolverAbort(os.str());
    }

    GalerkinDiagnostics nd = instant_diagnostics(res.state, res.rho, forcing_at(res.state.time, fbuf), cfg.params);
    if (cfg.extra_power) nd.extra_power = cfg.extra_power(res.state, res.rho);
    const GalerkinDiagnostics& prev = res.diagnostics.back();
    nd.dissipation_integral = prev.dissipation_integral + 0.5 * cfg.dt * (prev.dissipation + nd.dissipation);
    nd.work_integral = prev.work_integral + 0.5 * cfg.dt * (prev.work + nd.work);
    nd.extra_integral = prev.extra_integral + 0.5 * cfg.dt * (prev.extra_power + nd.extra_power);
    nd.energy_defect = nd.energy - E0 + 4.0 * nd.dissipation_integral + 2.0 * nd.extra_integral - 2.0 * nd.work_integral;
    res.diagnostics.push_back(nd);
    store(n + 1);
    if (cfg.observer) cfg.observer(nd, res.state, res.rho);
  }
  return res;
}

EnergyReport energy_report(const std::vector<GalerkinDiagnostics>& diagnostics, double tol) {
  EnergyReport r;
  if (diagnostics.empty()) return r;
  r.initial_energy = diagnostics.front().energy;
  for (std::size_t i = 0; i < diagnostics.size(); ++i) {
    const double dfc = diagnostics[i].energy_defect;
    r.defect.push_back(dfc);
    r.max_defect = std::max(r.max_defect, dfc);
    r.max_abs_defect = std::max(r.max_abs_defect, std::abs(dfc));
    if (i > 0) r.max_step_increase = std::max(r.max_step_increase, diagnostics[i].energy - diagnostics[i - 1].energy);
  }
  const double scale = std::max(r.initial_energy, 1e-300);
  r.flagged = r.max_defect > tol * scale;
  return r;
}

}  // namespace rheoflow
