#pragma once

#include <optional>
#include <vector>

#include "rheoflow/grid.hpp"
#include "rheoflow/interpolate.hpp"
#include "rheoflow/operators.hpp"

namespace rheoflow {

/// lambda: diffusion coefficient; mobility: coefficient of the fourth-order
/// term; reg_eps: viscosity of the regularized continuity equation.
struct DiffusionParams {
  double lambda = 0.0;
  double mobility = 0.0;
  double reg_eps = 0.0;
  void validate() const;
};

struct DensityBounds {
  double lower = 0.0;
  double upper = 0.0;
  void validate() const;
  bool contains(const ScalarField& rho, double tol = 0.0) const;
};

struct AdvectOptions {
  InterpMethod method = InterpMethod::Cubic;
  /// Clamp interpolated values to fixed bounds, normally the range of the
  /// initial density. Bounds taken from the current grid values would cut
  /// extrema lying between nodes by O(h^2) at every step.
  std::optional<DensityBounds> clamp;
};

/// Semi-Lagrangian step: rho_new(x) = rho(X(t; t+dt, x)) with the foot point
/// found by RK4 backtracking through the (frozen) velocity.
ScalarField advect_step(const ScalarField& rho, const VectorField& u, double dt, const AdvectOptions& opt = {});
ScalarField advect_step(const ScalarField& rho, const VectorInterpolant& u, double dt, const AdvectOptions& opt = {});
/// CFL number |u|_inf dt / h.
double cfl_number(const VectorField& u, double dt);

/// Eigenvalues of the five-point (seven-point in 3D) finite-difference Laplacian.
/// Used where an M-matrix discretization is needed for an exact maximum principle.
double fd_laplacian_symbol(const Grid& g, const std::array<int, 3>& k);

/// One step of  d_t rho + u.grad rho - eps Lap rho + rho = rho_prev:
/// characteristic advection, then backward Euler for the linear part with the
/// finite-difference Laplacian, so the result stays within the bounds of rho and rho_prev.
ScalarField regularized_continuity_step(const ScalarField& rho, const ScalarField& rho_prev, const VectorField& u,
                                        double eps, double dt);
/// Same, with u given as a prebuilt interpolant (nullptr means u = 0).
ScalarField regularized_continuity_step(const ScalarField& rho, const ScalarField& rho_prev,
                                        const VectorInterpolant* u, double eps, double dt);

/// One step of d_t rho + psi.grad rho - lambda Lap(rho - Dm Lap rho) = 0 by
/// integrating-factor RK4: the linear symbol -lambda(|k|^2 + Dm |k|^4) is
/// integrated exactly and the advection term explicitly. The mean is kept exactly.
ScalarField kss_diffusion_step(const ScalarField& rho, const VectorField& psi, const DiffusionParams& params, double dt);

/// Time series of the estimate levels of the fourth-order diffusion equation.
struct LadderLevel {
  std::string name;
  /// Left-hand side at each stored time (quantity plus accumulated dissipation).
  std::vector<double> lhs;
  /// Gronwall-type majorant evaluated with measured sup norms of psi.
  std::vector<double> majorant;
  /// max_t lhs / majorant
  double max_ratio = 0.0;
  bool flagged = false;
};

struct LadderReport {
  std::vector<double> times;
  std::vector<LadderLevel> levels;
  /// Raw series: |rho|^2, |grad rho|^2, |Lap rho|^2, |grad Lap rho|^2.
  std::vector<double> rho_l2sq, grad_l2sq, lap_l2sq, gradlap_l2sq;
  /// Time integral of |grad rho|^2 + |Lap rho|^2.
  std::vector<double> h1h2_integral;
  bool any_flag = false;
};

/// psi holds either one field (time independent) or one field per stored time.
/// Relative slack covers time-quadrature error of the stored series.
LadderReport diffusion_estimate_ladder(const std::vector<double>& times, const std::vector<ScalarField>& rho,
                                       const std::vector<VectorField>& psi, const DiffusionParams& params,
                                       double slack = 1e-4);

struct DensityInvariantReport {
  std::vector<double> mass;
  std::vector<double> l1, l2, l4;
  std::vector<double> min, max;
  double max_mass_drift = 0.0;  // relative
  double max_l1_drift = 0.0;    // relative
  double max_l2_drift = 0.0;    // relative
  double max_l4_drift = 0.0;    // relative
  double overall_min = 0.0;
  double overall_max = 0.0;
};

DensityInvariantReport density_invariants(const std::vector<ScalarField>& rho_series);

}  // namespace rheoflow
