#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "rheoflow/errors.hpp"
#include "rheoflow/galerkin.hpp"

namespace rheoflow {

/// Time-periodic forcing problem on [0, T] with density bounds alpha <= rho <= beta
/// and the viscosity reg_eps of the regularized continuity equation.
struct PeriodicProblem {
  double period = 1.0;
  /// Body force per unit mass; empty means f = 0. Must satisfy f(t + T) = f(t).
  std::function<VectorField(double)> forcing;
  double alpha = 0.5;
  double beta = 1.5;
  double reg_eps = 0.5;
  void validate() const;
};

/// One row of an iteration log.
struct IterationRecord {
  int iter = 0;
  /// Distance between successive iterates in the driver's metric.
  double residual = 0.0;
  /// residual_k / residual_{k-1}; NaN on the first row.
  double contraction_ratio = 0.0;
  double horizon = 0.0;
  /// Periodic driver only: measured ratios of S and Z on the last two iterates
  /// with the lagged data held fixed (NaN when not measured).
  double s_ratio = 0.0;
  double z_ratio = 0.0;
};

/// Writes "iter,residual,contraction_ratio,horizon" with shortest round-trip doubles.
void write_iteration_csv(std::ostream& os, const std::vector<IterationRecord>& log);

/// Raised when a fixed-point driver detects non-contraction; carries the log.
struct FixedPointAbort : SolverAbort {
  FixedPointAbort(const std::string& what, std::vector<IterationRecord> log_)
      : SolverAbort(what), log(std::move(log_)) {}
  std::vector<IterationRecord> log;
};

/// Lagged fields of the previous outer pass, sampled at t_n = n dt (n = 0..steps).
struct LaggedFields {
  /// Advecting velocity u_prev(t_n); empty means 0.
  std::function<VectorField(int)> velocity;
  /// Relaxation target rho_prev(t_n).
  std::function<ScalarField(int)> density;
};

/// S: rho(0) -> rho(T) for  d_t rho + u_prev.grad rho - eps Lap rho + rho = rho_prev.
/// Throws std::invalid_argument if rho0 leaves [alpha, beta] and SolverAbort if
/// the output does (beyond 1e-8).
ScalarField map_S(const ScalarField& rho0, const PeriodicProblem& problem, int steps, const LaggedFields& lagged);

/// Sampled trajectory over one period: rho[n] and velocity coefficients c[n], n = 0..steps.
struct PeriodicTrajectory {
  std::vector<ScalarField> rho;
  std::vector<Eigen::VectorXd> coeffs;
};

struct PeriodicConfig {
  std::shared_ptr<const BasisSet> basis;
  PowerLawParams params{1.0, 2.0};
  int steps = 1000;
  int max_iters = 60;
  double tol = 1e-8;
  /// Initial guess; empty rho means the constant (alpha + beta)/2, empty c means 0.
  ScalarField rho_start;
  Eigen::VectorXd c_start;
  /// Measure the S and Z ratios each iteration (one extra density pass and one
  /// extra momentum pass per iteration).
  bool measure_maps = true;
  void validate() const;
};

/// One joint pass of the regularized density equation and the momentum equation
///   rho d_t u + rho (u_prev.grad) u + (1/2)(eps Lap rho - rho + rho_prev) u = div 2T(u) + rho f
/// from (rho0, c0) with the lagged trajectory held fixed.
PeriodicTrajectory periodic_pass(const ScalarField& rho0, const Eigen::VectorXd& c0, const PeriodicProblem& problem,
                                 const PeriodicConfig& config, const PeriodicTrajectory& lagged);

/// Z: c(0) -> c(T) for the momentum equation along a given density trajectory.
Eigen::VectorXd map_Z(const Eigen::VectorXd& c0, const PeriodicTrajectory& density_path,
                      const PeriodicProblem& problem, const PeriodicConfig& config,
                      const PeriodicTrajectory& lagged);

/// |rho_a - rho_b|_2 + |sqrt(rho_a) u_a - sqrt(rho_b) u_b|_2
double periodic_distance(const ScalarField& rho_a, const Eigen::VectorXd& c_a, const ScalarField& rho_b,
                         const Eigen::VectorXd& c_b, const BasisSet& basis);

struct PeriodicResult {
  ScalarField rho;
  Eigen::VectorXd coeffs;
  PeriodicTrajectory trajectory;
  std::vector<IterationRecord> log;
  int iterations = 0;
  bool converged = false;
  /// Endpoint mismatch of one further pass started from the converged state.
  double replay_mismatch = 0.0;
  /// Decay rate c from the largest measured Z ratio (ratio^2 = exp(-c T)).
  double z_rate = 0.0;
  /// (1 - exp(-c T))^-1 int_0^T |rho f|_2^2 dt and the largest |sqrt(rho) u(0)|^2 seen.
  double ball_radius_required = 0.0;
  double max_start_energy = 0.0;
};

/// Joint outer iteration of S and Z with lagged (rho_prev, u_prev). Stops when
/// the residual drops below tol; throws FixedPointAbort after 5 consecutive
/// iterations with contraction ratio >= 1.
PeriodicResult periodic_solve(const PeriodicProblem& problem, const PeriodicConfig& config);

// ---------------------------------------------------------------------------
// Picard iteration for the local problem with u(0) = 0.

struct PicardConfig {
  double ball_radius = 10.0;
  double horizon = 0.5;
  int max_iters = 40;
  double tol = 1e-9;
  /// Time step; the step count is round(horizon / dt) and follows the horizon when it is halved.
  double dt = 1e-3;
  int max_halvings = 5;
  void validate() const;
};

/// Velocity coefficients c[n] at t_n = n dt (n = 0..N) with c[0] = 0.
using CoeffPath = std::vector<Eigen::VectorXd>;

struct PicardIterate {
  std::vector<ScalarField> rho;
  CoeffPath coeffs;
};

/// A system iterated by picard_G: G maps a velocity path v to (rho, u) by
/// transporting the density with v and solving the frozen linear momentum equation.
class PicardSystem {
 public:
  virtual ~PicardSystem() = default;
  virtual const BasisSet& basis() const = 0;
  virtual PicardIterate apply(const CoeffPath& v, double dt) const = 0;
  /// L2(Q) norm of the nonlinear momentum residual with the density recomputed from u.
  virtual double residual(const CoeffPath& u, double dt) const = 0;
  /// 2 cbar sup|1 - rho0| for the surrogate constant cbar of the linear solve.
  virtual double smallness() const = 0;
};

/// rho d_t u + rho u.grad u = div 2T(u) + rho f with d_t rho + u.grad rho = 0,
/// frozen as  d_t u - div(2 nu(|D v|^2) D u) = (1 - rho) d_t v - rho v.grad v + rho f.
class PowerLawPicard : public PicardSystem {
 public:
  PowerLawPicard(std::shared_ptr<const BasisSet> basis, ScalarField rho0, std::function<VectorField(double)> forcing,
                 PowerLawParams params);
  const BasisSet& basis() const override { return *basis_; }
  PicardIterate apply(const CoeffPath& v, double dt) const override;
  double residual(const CoeffPath& u, double dt) const override;
  double smallness() const override;
  /// cbar = 1: for d_t u - mu Lap u = g with u(0) = 0, |d_t u|_{L2(Q)} <= |g|_{L2(Q)}.
  static constexpr double cbar = 1.0;

 private:
  std::vector<ScalarField> transport(const CoeffPath& v, double dt) const;
  std::shared_ptr<const BasisSet> basis_;
  ScalarField rho0_;
  std::function<VectorField(double)> forcing_;
  PowerLawParams params_;
};

/// sqrt(sum_n dt |a_n - b_n|^2) over n = 1..N (orthonormal basis, so this is the L2(Q) distance).
double path_distance(const CoeffPath& a, const CoeffPath& b, double dt);
/// max(|u|_{L2(0,T;H2)}, |d_t u|_{L2(Q)}), the desk surrogate of the ball norm.
double path_ball_norm(const CoeffPath& u, const BasisSet& basis, double dt);

struct PicardResult {
  PicardIterate limit;
  std::vector<IterationRecord> log;
  bool converged = false;
  double horizon = 0.0;
  int halvings = 0;
  double residual = 0.0;
  double smallness = 0.0;
};

/// Iterates v <- G(v) from `start` (zero path when empty). When an iterate
/// leaves the ball the horizon is halved and the iteration restarts; after
/// max_halvings restarts SolverAbort is thrown. Converged means successive
/// distance <= tol and residual <= 10 tol.
PicardResult picard_G(const PicardConfig& config, const PicardSystem& system, const CoeffPath& start = {});

}  // namespace rheoflow
