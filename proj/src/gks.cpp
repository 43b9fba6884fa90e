#include "rheoflow/gks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rheoflow/log.hpp"
#include "rheoflow/transport.hpp"

namespace rheoflow {

void MixtureParams::validate() const {
  if (!(rho10 > 0.0) || !(rho20 > 0.0)) throw std::invalid_argument("MixtureParams: rho10 and rho20 must be positive");
  if (rho10 == rho20) throw std::invalid_argument("MixtureParams: rho10 and rho20 must differ");
  if (!(lambda >= 0.0)) throw std::invalid_argument("MixtureParams: lambda must be >= 0");
  if (!(mobility >= 0.0)) throw std::invalid_argument("MixtureParams: mobility must be >= 0");
  if (!(mu > 0.0)) throw std::invalid_argument("MixtureParams: mu must be positive");
  if (!(m_shift >= 0.0)) throw std::invalid_argument("MixtureParams: m_shift must be >= 0");
}

void GksModel::validate(const MixtureParams& params) const {
  if (variant == GksVariant::KS && params.mobility != 0.0)
    throw std::invalid_argument("GksModel: the KS variant requires mobility = 0");
}

ScalarField theta(const ScalarField& rho, double mobility) {
  if (mobility == 0.0) return rho;
  ScalarField out = laplacian(rho);
  out *= -mobility;
  out += rho;
  return out;
}

ScalarField chemical_potential(const ScalarField& c, double mobility) { return theta(c, mobility); }

namespace {

ScalarField shifted_density(const ScalarField& rho, double m) {
  ScalarField rb = rho;
  for (double& x : rb.values) x += m;
  return rb;
}

void require_positive(const ScalarField& rho_bar, const char* what) {
  const double lo = min_value(rho_bar);
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << what << ": rho_bar lost positivity (min " << lo << ")";
    throw SolverAbort(os.str());
  }
}

// (a . grad) b with spectral derivatives and raw pointwise products.
VectorField raw_directional(const VectorField& a, const VectorField& b) {
  VectorField out(a.grid);
  for (int i = 0; i < b.dim(); ++i) {
    const Spectrum bs = to_spectral(b[i]);
    for (int j = 0; j < a.dim(); ++j) {
      const ScalarField d = to_physical(derivative(bs, j));
      for (std::size_t p = 0; p < d.size(); ++p) out[i][p] += a[j][p] * d[p];
    }
  }
  return out;
}

double grad_norm_squared(const VectorField& u) {
  double s = 0.0;
  for (int i = 0; i < u.dim(); ++i) {
    const VectorField g = gradient(u[i]);
    s += l2_inner(g, g);
  }
  return s;
}

}  // namespace

VectorField korteweg_force(const ScalarField& th, const ScalarField& rho_bar, double lambda) {
  require_same_grid(th.grid, rho_bar.grid, "korteweg_force");
  const Grid& g = th.grid;
  VectorField out(g);
  if (lambda == 0.0) return out;
  if (!(min_value(rho_bar) > 0.0)) throw std::domain_error("korteweg_force: rho_bar must be positive");
  const VectorField gt = gradient(th);
  const int d = g.dim;
  for (int i = 0; i < d; ++i) {
    VectorSpectrum row(g);
    for (int j = 0; j < d; ++j) {
      ScalarField m(g);
      for (std::size_t p = 0; p < m.size(); ++p) m[p] = gt[i][p] * gt[j][p] / rho_bar[p];
      row[j] = to_spectral(m);
    }
    out[i] = to_physical(divergence(row));
    out[i] *= -lambda * lambda;
  }
  return out;
}

VectorField korteweg_force_expanded(const ScalarField& th, const ScalarField& rho_bar, double lambda) {
  require_same_grid(th.grid, rho_bar.grid, "korteweg_force_expanded");
  const Grid& g = th.grid;
  VectorField out(g);
  if (lambda == 0.0) return out;
  if (!(min_value(rho_bar) > 0.0)) throw std::domain_error("korteweg_force_expanded: rho_bar must be positive");
  const VectorField gt = gradient(th);
  const VectorField gr = gradient(rho_bar);
  const VectorField hess_term = raw_directional(gt, gt);
  const ScalarField lt = laplacian(th);
  const ScalarField gg = dot(gr, gt);
  const double l2 = lambda * lambda;
  for (int i = 0; i < g.dim; ++i)
    for (std::size_t p = 0; p < out[i].size(); ++p) {
      const double rb = rho_bar[p];
      out[i][p] = -l2 / rb * (hess_term[i][p] + lt[p] * gt[i][p]) + l2 / (rb * rb) * gg[p] * gt[i][p];
    }
  return out;
}

VectorField GksForces::total() const {
  VectorField t = viscous;
  t += convection;
  t += theta_grad;
  t += theta_adv;
  t += korteweg;
  t += body;
  return t;
}

GksForces gks_forces(const VectorField& u, const ScalarField& rho, const VectorField* f, const MixtureParams& params,
                     const GksModel& model) {
  require_same_grid(u.grid, rho.grid, "gks_forces");
  const Grid& g = u.grid;
  const ScalarField rb = shifted_density(rho, params.m_shift);
  GksForces F;
  F.viscous = laplacian(u);
  F.viscous *= params.mu;
  F.convection = scale(rb, directional_derivative(u, u));
  F.convection *= -1.0;
  F.theta_grad = VectorField(g);
  F.theta_adv = VectorField(g);
  F.korteweg = VectorField(g);
  F.body = f ? scale(rb, *f) : VectorField(g);
  if (params.lambda != 0.0) {
    const double mob = model.variant == GksVariant::KS ? 0.0 : params.mobility;
    const ScalarField th = theta(rho, mob);
    const VectorField gt = gradient(th);
    F.theta_grad = directional_derivative(gt, u);
    F.theta_grad *= model.sign == ThetaSign::Canonical ? params.lambda : -params.lambda;
    if (model.variant != GksVariant::Graffi) {
      F.theta_adv = directional_derivative(u, gt);
      F.theta_adv *= params.lambda;
      F.korteweg = korteweg_force(th, rb, params.lambda);
    }
  }
  return F;
}

VectorField gks_acceleration(const VectorField& u, const ScalarField& rho, const VectorField* f,
                             const MixtureParams& params, const GksModel& model) {
  const ScalarField rb = shifted_density(rho, params.m_shift);
  require_positive(rb, "gks_acceleration");
  const VectorField G = gks_forces(u, rho, f, params, model).total();
  return weighted_project(G, rb).accel;
}

VectorField gks_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                              const MixtureParams& params, const GksModel& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("gks_momentum_step: dt must be positive");
  params.validate();
  model.validate(params);
  const VectorField k1 = gks_acceleration(u, rho, f, params, model);
  const VectorField k2 = gks_acceleration(u + (0.5 * dt) * k1, rho, f, params, model);
  const VectorField k3 = gks_acceleration(u + (0.5 * dt) * k2, rho, f, params, model);
  const VectorField k4 = gks_acceleration(u + dt * k3, rho, f, params, model);
  VectorField out = u;
  out.axpy(dt / 6.0, k1);
  out.axpy(dt / 3.0, k2);
  out.axpy(dt / 3.0, k3);
  out.axpy(dt / 6.0, k4);
  return out;
}

VectorField graffi_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                                 const MixtureParams& params, double dt, ThetaSign sign) {
  return gks_momentum_step(u, rho, f, params, GksModel{GksVariant::Graffi, sign}, dt);
}

VectorField full_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                               const MixtureParams& params, double dt, ThetaSign sign) {
  return gks_momentum_step(u, rho, f, params, GksModel{GksVariant::Full, sign}, dt);
}

GksDiagnostics gks_instant_diagnostics(const VectorField& u, const ScalarField& rho, const VectorField* f,
                                       const MixtureParams& params, const GksModel& model) {
  const ScalarField rb = shifted_density(rho, params.m_shift);
  GksDiagnostics d;
  d.energy = l2_inner(u, scale(rb, u));
  d.dissipation = params.mu * grad_norm_squared(u);
  const GksForces F = gks_forces(u, rho, f, params, model);
  d.work = l2_inner(F.body, u);
  d.korteweg_work = l2_inner(F.korteweg, u);
  d.extra_power = l2_inner(F.theta_adv, u) + d.korteweg_work;
  if (model.sign == ThetaSign::Flipped) d.extra_power += 2.0 * l2_inner(F.theta_grad, u);
  const double mob = model.variant == GksVariant::KS ? 0.0 : params.mobility;
  d.theta_l2 = std::sqrt(l2_inner(theta(rho, mob), theta(rho, mob)));
  d.mean_rho = mean(rho);
  d.rho_min = min_value(rho);
  d.rho_max = max_value(rho);
  d.rho_bar_min = min_value(rb);
  d.u_max = sup_norm(u);
  return d;
}

void GksConfig::validate() const {
  params.validate();
  model.validate(params);
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("GksConfig: dt and t_end must be positive");
  if (store_stride < 0) throw std::invalid_argument("GksConfig: store_stride must be >= 0");
}

GksResult run_gks(const GksConfig& cfg, const ScalarField& rho0, const VectorField& u0) {
  cfg.validate();
  require_same_grid(rho0.grid, u0.grid, "run_gks");
  require_positive(shifted_density(rho0, cfg.params.m_shift), "run_gks");
  const double kmax = std::sqrt(static_cast<double>(rho0.grid.dim)) * (rho0.grid.n / 2) * 2.0 * std::numbers::pi /
                      rho0.grid.length;
  const double visc = cfg.dt * cfg.params.mu * kmax * kmax / (min_value(rho0) + cfg.params.m_shift);
  if (visc > 2.7)
    warn("run_gks: explicit viscous number " + std::to_string(visc) + " exceeds the RK4 stability bound 2.7");

  const DiffusionParams dp{cfg.params.lambda, cfg.model.variant == GksVariant::KS ? 0.0 : cfg.params.mobility, 0.0};
  GksResult res;
  res.rho = rho0;
  res.u = u0;
  const long long steps = std::max<long long>(1, std::llround(cfg.t_end / cfg.dt));

  VectorField fbuf;
  auto forcing_at = [&](double t) -> const VectorField* {
    if (!cfg.forcing) return nullptr;
    fbuf = cfg.forcing(t);
    return &fbuf;
  };
  auto store = [&](long long n, double t) {
    if (cfg.store_stride > 0 && n % cfg.store_stride == 0) {
      res.stored_times.push_back(t);
      res.stored_rho.push_back(res.rho);
      res.stored_u.push_back(res.u);
    }
  };

  const double t0 = cfg.start_time;
  GksDiagnostics d = gks_instant_diagnostics(res.u, res.rho, forcing_at(t0), cfg.params, cfg.model);
  d.time = t0;
  const double E0 = d.energy;
  res.diagnostics.push_back(d);
  store(0, t0);
  if (cfg.observer) cfg.observer(d, res.u, res.rho);

  for (long long n = 0; n < steps; ++n) {
    const double t = t0 + n * cfg.dt;
    const double t1 = t0 + (n + 1) * cfg.dt;
    res.rho = kss_diffusion_step(res.rho, res.u, dp, cfg.dt);
    require_positive(shifted_density(res.rho, cfg.params.m_shift), "run_gks");
    const VectorField* f = forcing_at(t + 0.5 * cfg.dt);
    res.u = gks_momentum_step(res.u, res.rho, f, cfg.params, cfg.model, cfg.dt);
    const double umax = sup_norm(res.u);
    if (!std::isfinite(umax) || umax > cfg.blowup_threshold) {
      std::ostringstream os;
      os << "blow-up guard: sup|u| = " << umax << " at t = " << t1;
      throw SolverAbort(os.str());
    }
    GksDiagnostics nd = gks_instant_diagnostics(res.u, res.rho, forcing_at(t1), cfg.params, cfg.model);
    nd.time = t1;
    const GksDiagnostics& prev = res.diagnostics.back();
    nd.dissipation_integral = prev.dissipation_integral + 0.5 * cfg.dt * (prev.dissipation + nd.dissipation);
    nd.work_integral = prev.work_integral + 0.5 * cfg.dt * (prev.work + nd.work);
    nd.extra_integral = prev.extra_integral + 0.5 * cfg.dt * (prev.extra_power + nd.extra_power);
    nd.energy_defect = nd.energy - E0 + 2.0 * nd.dissipation_integral - 2.0 * nd.work_integral - 2.0 * nd.extra_integral;
    res.diagnostics.push_back(nd);
    store(n + 1, t1);
    if (cfg.observer) cfg.observer(nd, res.u, res.rho);
  }
  return res;
}

namespace {

// (lambda / rho)(grad rho - Dm grad Lap rho)
VectorField fick_correction(const ScalarField& rho, const MixtureParams& params) {
  if (!(min_value(rho) > 0.0)) throw std::domain_error("velocity transform: rho must be positive");
  VectorField g = gradient(theta(rho, params.mobility));
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t p = 0; p < rho.size(); ++p) g[a][p] *= params.lambda / rho[p];
  return g;
}

}  // namespace

VectorField mass_to_volume_velocity(const VectorField& v, const ScalarField& rho, const MixtureParams& params) {
  require_same_grid(v.grid, rho.grid, "mass_to_volume_velocity");
  return v - fick_correction(rho, params);
}

VectorField volume_from_mass_velocity(const VectorField& w, const ScalarField& rho, const MixtureParams& params) {
  require_same_grid(w.grid, rho.grid, "volume_from_mass_velocity");
  return w + fick_correction(rho, params);
}

DualResidual dual_continuity_residuals(const ScalarField& rho, const ScalarField& drho_dt, const VectorField& v,
                                       const MixtureParams& params) {
  require_same_grid(rho.grid, v.grid, "dual_continuity_residuals");
  require_same_grid(rho.grid, drho_dt.grid, "dual_continuity_residuals");
  DualResidual r;
  const VectorField w = mass_to_volume_velocity(v, rho, params);
  r.mass = drho_dt + divergence(scale(rho, w));
  ScalarField diff = laplacian(theta(rho, params.mobility));
  diff *= params.lambda;
  r.volume = drho_dt + divergence(scale(rho, v)) - diff;
  return r;
}

ConcentrationMaps concentration_maps(const ScalarField& rho, const MixtureParams& params) {
  params.validate();
  const double lo = std::min(params.rho10, params.rho20);
  const double hi = std::max(params.rho10, params.rho20);
  if (!(min_value(rho) > lo) || !(max_value(rho) < hi))
    throw std::domain_error("concentration_maps: density must lie strictly between rho10 and rho20");
  const Grid& g = rho.grid;
  ConcentrationMaps m;
  m.alpha = ScalarField(g);
  m.c = ScalarField(g);
  for (std::size_t p = 0; p < rho.size(); ++p) {
    m.alpha[p] = (rho[p] - params.rho20) / (params.rho10 - params.rho20);
    m.c[p] = m.alpha[p] * params.rho10 / rho[p];
  }
  m.fick_lhs = gradient(m.c);
  const VectorField gr = gradient(rho);
  m.fick_rhs = VectorField(g);
  for (int a = 0; a < g.dim; ++a)
    for (std::size_t p = 0; p < rho.size(); ++p) {
      m.fick_lhs[a][p] /= m.c[p];
      m.fick_rhs[a][p] = params.rho20 * gr[a][p] / (rho[p] * (rho[p] - params.rho20));
    }
  return m;
}

ConstituentDensities constituent_densities(const ScalarField& rho, const MixtureParams& params) {
  params.validate();
  ConstituentDensities d{ScalarField(rho.grid), ScalarField(rho.grid)};
  for (std::size_t p = 0; p < rho.size(); ++p) {
    const double alpha = (rho[p] - params.rho20) / (params.rho10 - params.rho20);
    d.rho1[p] = alpha * params.rho10;
    d.rho2[p] = (1.0 - alpha) * params.rho20;
  }
  return d;
}

ScalarField volume_additivity_residual(const ConstituentDensities& d, const MixtureParams& params) {
  ScalarField r(d.rho1.grid);
  for (std::size_t p = 0; p < r.size(); ++p)
    r[p] = d.rho1[p] * params.rho20 + d.rho2[p] * params.rho10 - params.rho10 * params.rho20;
  return r;
}

// ---------------------------------------------------------------------------

GksPicard::GksPicard(std::shared_ptr<const BasisSet> basis, ScalarField rho0, std::function<VectorField(double)> forcing,
                     MixtureParams params, GksModel model)
    : basis_(std::move(basis)),
      rho0_(std::move(rho0)),
      forcing_(std::move(forcing)),
      params_(params),
      model_(model) {
  if (!basis_) throw std::invalid_argument("GksPicard: basis is required");
  require_same_grid(rho0_.grid, basis_->grid(), "GksPicard");
  params_.validate();
  model_.validate(params_);
  if (!(min_value(rho0_) + params_.m_shift > 0.0)) throw std::invalid_argument("GksPicard: rho_bar0 must be positive");
}

double GksPicard::smallness() const {
  const double m = params_.m_shift;
  return 2.0 * PowerLawPicard::cbar *
         std::max(std::abs(1.0 - min_value(rho0_) - m), std::abs(1.0 - max_value(rho0_) - m));
}

std::vector<ScalarField> GksPicard::transport(const CoeffPath& v, double dt) const {
  const DiffusionParams dp{params_.lambda, model_.variant == GksVariant::KS ? 0.0 : params_.mobility, 0.0};
  std::vector<ScalarField> rho;
  rho.reserve(v.size());
  rho.push_back(rho0_);
  for (std::size_t n = 0; n + 1 < v.size(); ++n)
    rho.push_back(kss_diffusion_step(rho[n], basis_->reconstruct(v[n]), dp, dt));
  return rho;
}

Eigen::VectorXd GksPicard::explicit_terms(const Eigen::VectorXd& v, const ScalarField& rho, double t) const {
  const VectorField vf = basis_->reconstruct(v);
  VectorField fbuf;
  if (forcing_) fbuf = forcing_(t);
  GksForces F = gks_forces(vf, rho, forcing_ ? &fbuf : nullptr, params_, model_);
  F.viscous = VectorField(vf.grid);
  return basis_->pair(F.total());
}

PicardIterate GksPicard::apply(const CoeffPath& v, double dt) const {
  if (v.empty() || v[0].norm() != 0.0) throw std::invalid_argument("GksPicard: v must start at 0");
  const BasisSet& b = *basis_;
  const Eigen::VectorXd L = b.laplacian_diagonal();
  const double mu = params_.mu;
  PicardIterate out;
  out.rho = transport(v, dt);
  out.coeffs.reserve(v.size());
  out.coeffs.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size())));
  for (std::size_t n = 0; n + 1 < v.size(); ++n) {
    const ScalarField& r1 = out.rho[n + 1];
    VectorField dv = b.reconstruct((v[n + 1] - v[n]) / dt);
    for (int a = 0; a < dv.dim(); ++a)
      for (std::size_t p = 0; p < r1.size(); ++p) dv[a][p] *= 1.0 - r1[p] - params_.m_shift;
    const Eigen::VectorXd g = b.pair(dv) + explicit_terms(v[n], r1, static_cast<double>(n) * dt);
    const Eigen::VectorXd& c = out.coeffs[n];
    out.coeffs.push_back(((c / dt + g).array() / (1.0 / dt - mu * L.array())).matrix());
  }
  return out;
}

double GksPicard::residual(const CoeffPath& u, double dt) const {
  const BasisSet& b = *basis_;
  const Eigen::VectorXd L = b.laplacian_diagonal();
  const std::vector<ScalarField> rho = transport(u, dt);
  double s = 0.0;
  for (std::size_t n = 0; n + 1 < u.size(); ++n) {
    const ScalarField& r1 = rho[n + 1];
    VectorField du = b.reconstruct((u[n + 1] - u[n]) / dt);
    for (int a = 0; a < du.dim(); ++a)
      for (std::size_t p = 0; p < r1.size(); ++p) du[a][p] *= r1[p] + params_.m_shift;
    Eigen::VectorXd R = b.pair(du) - explicit_terms(u[n], r1, static_cast<double>(n) * dt);
    R -= params_.mu * L.cwiseProduct(u[n + 1]);
    s += dt * R.squaredNorm();
  }
  return std::sqrt(s);
}

}  // namespace rheoflow
