#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rheoflow/fixedpoint.hpp"
#include "rheoflow/grid.hpp"
#include "rheoflow/operators.hpp"

namespace rheoflow {

/// Binary mixture of two miscible, separately incompressible fluids.
/// rho10, rho20: unmixed densities; lambda: diffusion coefficient;
/// mobility: coefficient Dm of theta = rho - Dm Lap rho; mu: viscosity;
/// m_shift: the momentum equation uses rho_bar = rho + m_shift.
struct MixtureParams {
  double rho10 = 2.0;
  double rho20 = 1.0;
  double lambda = 0.0;
  double mobility = 0.0;
  double mu = 0.05;
  double m_shift = 0.1;
  void validate() const;
};

enum class GksVariant {
  /// rho_bar (d_t u + u.grad u) - lambda (grad theta . grad) u = mu Lap u - grad pi + rho_bar f
  Graffi,
  /// Graffi plus -lambda (u.grad) grad theta on the left and the Korteweg block.
  Full,
  /// Full with Dm = 0, so theta = rho.
  KS,
};

/// Sign of the lambda (grad theta . grad) u term. Canonical is the
/// energy-consistent sign; Flipped is the alternative printed variant.
enum class ThetaSign { Canonical, Flipped };

struct GksModel {
  GksVariant variant = GksVariant::Full;
  ThetaSign sign = ThetaSign::Canonical;
  /// Throws std::invalid_argument when KS is combined with a nonzero mobility.
  void validate(const MixtureParams& params) const;
};

/// theta = rho - Dm Lap rho
ScalarField theta(const ScalarField& rho, double mobility);
/// omega(c) = c - Dm Lap c
ScalarField chemical_potential(const ScalarField& c, double mobility);

/// -lambda^2 div(grad theta (x) grad theta / rho_bar), conservative form.
VectorField korteweg_force(const ScalarField& theta, const ScalarField& rho_bar, double lambda);
/// The same force from the product rule:
/// -(lambda^2/rho_bar) ((grad theta . grad) grad theta + Lap theta grad theta)
///   + (lambda^2/rho_bar^2) (grad rho_bar . grad theta) grad theta.
VectorField korteweg_force_expanded(const ScalarField& theta, const ScalarField& rho_bar, double lambda);

/// Terms of the momentum right-hand side before the pressure projection:
/// rho_bar d_t u = G - grad pi.
struct GksForces {
  VectorField viscous;     // mu Lap u
  VectorField convection;  // -rho_bar (u.grad) u
  VectorField theta_grad;  // +-lambda (grad theta . grad) u
  VectorField theta_adv;   // lambda (u.grad) grad theta (Full, KS)
  VectorField korteweg;    // korteweg_force (Full, KS)
  VectorField body;        // rho_bar f
  VectorField total() const;
};
GksForces gks_forces(const VectorField& u, const ScalarField& rho, const VectorField* f, const MixtureParams& params,
                     const GksModel& model);

/// d_t u = P_rho_bar(G) / rho_bar with rho frozen. Throws SolverAbort if
/// min rho_bar <= 0.
VectorField gks_acceleration(const VectorField& u, const ScalarField& rho, const VectorField* f,
                             const MixtureParams& params, const GksModel& model);

/// One classical RK4 step of the momentum equation with rho (hence theta) frozen.
VectorField gks_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                              const MixtureParams& params, const GksModel& model, double dt);
VectorField graffi_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                                 const MixtureParams& params, double dt, ThetaSign sign = ThetaSign::Canonical);
VectorField full_momentum_step(const VectorField& u, const ScalarField& rho, const VectorField* f,
                               const MixtureParams& params, double dt, ThetaSign sign = ThetaSign::Canonical);

struct GksDiagnostics {
  double time = 0.0;
  /// |sqrt(rho_bar) u|_2^2
  double energy = 0.0;
  /// mu |grad u|_2^2 and its time integral.
  double dissipation = 0.0;
  double dissipation_integral = 0.0;
  /// (rho_bar f, u) and its time integral.
  double work = 0.0;
  double work_integral = 0.0;
  /// Power of the terms that the Graffi energy identity does not cancel
  /// (theta_adv, korteweg, and the flipped theta_grad), and its time integral.
  double extra_power = 0.0;
  double extra_integral = 0.0;
  /// (korteweg_force, u)
  double korteweg_work = 0.0;
  /// E(t) - E(0) + 2 int dissipation - 2 int work - 2 int extra
  double energy_defect = 0.0;
  double theta_l2 = 0.0;
  double mean_rho = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double rho_bar_min = 0.0;
  double u_max = 0.0;
};

GksDiagnostics gks_instant_diagnostics(const VectorField& u, const ScalarField& rho, const VectorField* f,
                                       const MixtureParams& params, const GksModel& model);

struct GksConfig {
  MixtureParams params;
  GksModel model;
  double dt = 1e-3;
  /// Duration of the run; the clock starts at start_time.
  double t_end = 1.0;
  double start_time = 0.0;
  std::function<VectorField(double)> forcing;
  int store_stride = 0;
  std::function<void(const GksDiagnostics&, const VectorField&, const ScalarField&)> observer;
  /// Abort when sup|u| exceeds this.
  double blowup_threshold = 1e6;
  void validate() const;
};

struct GksResult {
  std::vector<GksDiagnostics> diagnostics;
  VectorField u;
  ScalarField rho;
  std::vector<double> stored_times;
  std::vector<ScalarField> stored_rho;
  std::vector<VectorField> stored_u;
};

/// Lie splitting per step: kss_diffusion_step for
///   d_t rho + u.grad rho - lambda Lap theta = 0
/// with the current u, then gks_momentum_step at the new density.
/// u0 is used as given and should be divergence-free.
/// Throws SolverAbort on blow-up or when rho_bar loses positivity.
GksResult run_gks(const GksConfig& config, const ScalarField& rho0, const VectorField& u0);

/// w = v - (lambda / rho)(grad rho - Dm grad Lap rho)
VectorField mass_to_volume_velocity(const VectorField& v, const ScalarField& rho, const MixtureParams& params);
/// v = w + (lambda / rho)(grad rho - Dm grad Lap rho)
VectorField volume_from_mass_velocity(const VectorField& w, const ScalarField& rho, const MixtureParams& params);

/// Continuity residuals in the two forms:
///   mass:   d_t rho + div(rho w)
///   volume: d_t rho + div(rho v) - lambda Lap(rho - Dm Lap rho)
struct DualResidual {
  ScalarField mass;
  ScalarField volume;
};
DualResidual dual_continuity_residuals(const ScalarField& rho, const ScalarField& drho_dt, const VectorField& v,
                                       const MixtureParams& params);

/// alpha = (rho - rho20)/(rho10 - rho20), c = alpha rho10 / rho, and both sides
/// of grad c / c = rho20 grad rho / (rho (rho - rho20)).
struct ConcentrationMaps {
  ScalarField c;
  ScalarField alpha;
  VectorField fick_lhs;
  VectorField fick_rhs;
};
/// Throws std::domain_error unless rho lies strictly between rho10 and rho20.
ConcentrationMaps concentration_maps(const ScalarField& rho, const MixtureParams& params);

/// Constituent densities rho1 = alpha rho10, rho2 = (1 - alpha) rho20.
struct ConstituentDensities {
  ScalarField rho1;
  ScalarField rho2;
};
ConstituentDensities constituent_densities(const ScalarField& rho, const MixtureParams& params);
/// rho1 rho20 + rho2 rho10 - rho10 rho20, pointwise.
ScalarField volume_additivity_residual(const ConstituentDensities& d, const MixtureParams& params);

/// Picard map for the full system with u(0) = 0 on a Galerkin basis: the
/// density is advanced by kss_diffusion_step with v, and u solves
///   d_t u - mu Lap u = (1 - rho_bar) d_t v - rho_bar v.grad v
///                      + lambda ((v.grad) grad theta +- (grad theta . grad) v) + K(theta) + rho_bar f
/// with the mu Laplacian implicit.
class GksPicard : public PicardSystem {
 public:
  GksPicard(std::shared_ptr<const BasisSet> basis, ScalarField rho0, std::function<VectorField(double)> forcing,
            MixtureParams params, GksModel model = {});
  const BasisSet& basis() const override { return *basis_; }
  PicardIterate apply(const CoeffPath& v, double dt) const override;
  double residual(const CoeffPath& u, double dt) const override;
  /// 2 cbar sup|1 - rho_bar0| with cbar = 1.
  double smallness() const override;

 private:
  std::vector<ScalarField> transport(const CoeffPath& v, double dt) const;
  /// Pairing of every explicit term except the time derivative.
  Eigen::VectorXd explicit_terms(const Eigen::VectorXd& v, const ScalarField& rho, double t) const;
  std::shared_ptr<const BasisSet> basis_;
  ScalarField rho0_;
  std::function<VectorField(double)> forcing_;
  MixtureParams params_;
  GksModel model_;
};

}  // namespace rheoflow
