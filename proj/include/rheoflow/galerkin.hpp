#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "rheoflow/grid.hpp"
#include "rheoflow/operators.hpp"
#include "rheoflow/rheology.hpp"
#include "rheoflow/transport.hpp"

namespace rheoflow {

/// One real divergence-free Fourier mode
///   w = sqrt(2/V) e cos(k.x)  or  sqrt(2/V) e sin(k.x),  e . k = 0, |e| = 1.
/// k lies in the half-space whose first nonzero component is positive.
/// Polarizations: 2D {0: cos, 1: sin} with e = (-k_y, k_x)/|k|;
/// 3D {0: e1 cos, 1: e1 sin, 2: e2 cos, 3: e2 sin}.
struct BasisMode {
  std::array<int, 3> k{};
  int polarization = 0;
  Point e{};
  bool is_sine = false;
  double k2 = 0.0;  // physical |k|^2
};

/// L2-orthonormal divergence-free Fourier basis, ordered by |k|^2, then k
/// lexicographically, then polarization.
class BasisSet {
 public:
  BasisSet(const Grid& g, std::vector<BasisMode> modes);
  const Grid& grid() const { return grid_; }
  std::size_t size() const { return modes_.size(); }
  const BasisMode& mode(std::size_t i) const { return modes_[i]; }
  const std::vector<BasisMode>& modes() const { return modes_; }

  /// Sampled w_i.
  VectorField mode_field(std::size_t i) const;
  /// u = sum c_i w_i, in spectral and physical form.
  VectorSpectrum reconstruct_spectral(const Eigen::VectorXd& c) const;
  VectorField reconstruct(const Eigen::VectorXd& c) const;
  /// (F, w_i) for every mode (rectangle rule, computed from the FFT of F).
  Eigen::VectorXd pair(const VectorField& F) const;
  Eigen::VectorXd pair(const VectorSpectrum& F_hat) const;
  /// -|k_i|^2 per mode: the Laplacian is diagonal in this basis.
  Eigen::VectorXd laplacian_diagonal() const;

 private:
  Grid grid_;
  std::vector<BasisMode> modes_;
};

/// First m modes in basis order. Throws std::invalid_argument if m < 1 or if
/// the modes needed exceed the 2/3-rule band |k_a| <= n/3.
std::shared_ptr<const BasisSet> build_basis(const Grid& g, std::size_t m);
/// Every mode with |k| <= kmax (complete shells).
std::shared_ptr<const BasisSet> build_basis_cutoff(const Grid& g, double kmax);

struct GalerkinState {
  Eigen::VectorXd coeffs;
  std::shared_ptr<const BasisSet> basis;
  double time = 0.0;

  VectorField velocity() const { return basis->reconstruct(coeffs); }
};

/// A_ij = integral rho w_i . w_j, assembled from the DFT of rho at k_i +- k_j.
/// Throws std::domain_error if min rho <= 0.
Eigen::MatrixXd gram_matrix(const ScalarField& rho, const BasisSet& basis);

/// (weight w_i, w_j) with no sign requirement on the weight.
Eigen::MatrixXd weighted_mass_matrix(const ScalarField& weight, const BasisSet& basis);

/// -(rho (a.grad) u, w_i) for u = sum c_j w_j and a separate advecting field a.
Eigen::VectorXd transport_rhs(const VectorField& a, const Eigen::VectorXd& c, const BasisSet& basis,
                              const ScalarField& rho);

/// H_i = -(rho u.grad u, w_i) - 2 (T(D u), D w_i) + (rho f, w_i), with the
/// stress pairing evaluated as (div 2T, w_i). f may be null.
Eigen::VectorXd assemble_rhs(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                             const PowerLawParams& params);
/// Convective pairing -(rho u.grad u, w_i) alone.
Eigen::VectorXd convection_rhs(const Eigen::VectorXd& c, const BasisSet& basis, const ScalarField& rho);

enum class GalerkinScheme {
  /// Classical RK4 on A dc/dt = H(c) with A frozen over the step.
  RK4,
  /// Backward Euler for the mu0 Laplacian, forward Euler for everything else.
  IMEX,
  /// Not the Galerkin scheme: divides the momentum equation pointwise by rho
  /// and projects onto the basis, so no Gram solve is needed.
  Collocation,
};

/// Gram matrix with its Cholesky factor for repeated solves at fixed rho.
struct GramSystem {
  Eigen::MatrixXd A;
  Eigen::LLT<Eigen::MatrixXd> llt;
  explicit GramSystem(const ScalarField& rho, const BasisSet& basis);
};

/// One step of A(rho) dc/dt = H(c) with rho frozen. f may be null.
GalerkinState momentum_step(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                            const PowerLawParams& params, double dt, GalerkinScheme scheme = GalerkinScheme::RK4);
GalerkinState momentum_step(const GalerkinState& state, const ScalarField& rho, const GramSystem& gram,
                            const VectorField* f, const PowerLawParams& params, double dt, GalerkinScheme scheme);

/// c^T A(rho) c = |sqrt(rho) u|^2
double kinetic_energy(const GalerkinState& state, const ScalarField& rho);

enum class Splitting { Lie, Strang };

struct GalerkinDiagnostics {
  double time = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;
  double dissipation_integral = 0.0;
  double work = 0.0;  // (rho f, u)
  double work_integral = 0.0;
  /// Extra power withdrawn by a substep hook (penalty), and its time integral.
  double extra_power = 0.0;
  double extra_integral = 0.0;
  double mass = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double rho_l2 = 0.0;
  /// E(t) - E(0) + 4 int dissipation + 2 int extra - 2 int work.
  double energy_defect = 0.0;
  double coeff_max = 0.0;
};

struct SemiGalerkinConfig {
  PowerLawParams params;
  double dt = 1e-3;
  double t_end = 1.0;
  GalerkinScheme scheme = GalerkinScheme::RK4;
  Splitting splitting = Splitting::Lie;
  AdvectOptions advect;
  /// Clamp the transported density to the range of rho0 (maximum principle).
  bool clamp_to_initial_bounds = true;
  /// Body force per unit mass as a function of time; empty means f = 0.
  std::function<VectorField(double)> forcing;
  /// Optional extra substep applied after each momentum step (penalty solve),
  /// with the power it withdraws for the energy balance.
  std::function<void(GalerkinState&, const ScalarField& rho, const GramSystem& gram, double dt)> substep;
  std::function<double(const GalerkinState&, const ScalarField& rho)> extra_power;
  /// Store (rho, c) every `store_stride` steps (0 = never).
  int store_stride = 0;
  /// Called after every step with the newest diagnostics.
  std::function<void(const GalerkinDiagnostics&, const GalerkinState&, const ScalarField&)> observer;
  /// Abort when |c|_inf exceeds this.
  double blowup_threshold = 1e6;
};

struct SemiGalerkinResult {
  std::vector<GalerkinDiagnostics> diagnostics;
  GalerkinState state;
  ScalarField rho;
  std::vector<double> stored_times;
  std::vector<ScalarField> stored_rho;
  std::vector<Eigen::VectorXd> stored_coeffs;
};

/// Alternates advect_step for rho and momentum_step for c at fixed dt.
/// Throws SolverAbort on blow-up or loss of positivity.
SemiGalerkinResult run_semi_galerkin(const SemiGalerkinConfig& config, const ScalarField& rho0,
                                     const GalerkinState& state0);

/// Diagnostics of (rho, c) at one instant; integrals and defect are left at 0.
GalerkinDiagnostics instant_diagnostics(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                                        const PowerLawParams& params);

struct EnergyReport {
  std::vector<double> defect;
  /// Largest positive defect and largest |defect|.
  double max_defect = 0.0;
  double max_abs_defect = 0.0;
  /// Largest single-step increase E_{n+1} - E_n.
  double max_step_increase = 0.0;
  double initial_energy = 0.0;
  bool flagged = false;
};

/// Flags a positive defect above tol * max(E(0), tiny).
EnergyReport energy_report(const std::vector<GalerkinDiagnostics>& diagnostics, double tol = 1e-9);

}  // namespace rheoflow
