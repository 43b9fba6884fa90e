#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rheoflow/galerkin.hpp"

namespace rheoflow {

/// Closed convex set K in L2 containing 0. User-defined sets supply the
/// projection and the membership test.
class ConvexSet {
 public:
  virtual ~ConvexSet() = default;
  virtual VectorField project(const VectorField& v) const = 0;
  virtual bool contains(const VectorField& v, double tol = 1e-12) const = 0;
  virtual std::string name() const = 0;
};

/// {v : |v|_2 <= radius}
class L2Ball : public ConvexSet {
 public:
  explicit L2Ball(double radius);
  VectorField project(const VectorField& v) const override;
  bool contains(const VectorField& v, double tol = 1e-12) const override;
  std::string name() const override { return "l2-ball"; }
  double radius() const { return radius_; }

 private:
  double radius_;
};

/// {v : |v(x)| <= bound for every x}
class PointwiseBall : public ConvexSet {
 public:
  explicit PointwiseBall(double bound);
  VectorField project(const VectorField& v) const override;
  bool contains(const VectorField& v, double tol = 1e-12) const override;
  std::string name() const override { return "pointwise-ball"; }
  double bound() const { return bound_; }

 private:
  double bound_;
};

VectorField project(const VectorField& v, const ConvexSet& K);
/// beta(v) = v - P_K v
VectorField penalty(const VectorField& v, const ConvexSet& K);

struct PenaltyParams {
  double kappa = 1.0;
  void validate() const;
};

/// Explicit momentum step followed by a backward-Euler penalty substep
///   A (c - c*) + dt kappa (beta(u(c)), w_i) = 0
/// solved by damped Newton with a finite-difference Jacobian.
GalerkinState penalized_momentum_step(const GalerkinState& state, const ScalarField& rho, const VectorField* f,
                                      const PowerLawParams& params, const ConvexSet& K, double kappa, double dt,
                                      GalerkinScheme scheme = GalerkinScheme::IMEX);
/// The penalty substep alone, in place.
void penalty_substep(GalerkinState& state, const GramSystem& gram, const ConvexSet& K, double kappa, double dt);

/// Semi-Galerkin run with the penalty substep; diagnostics carry the power
/// kappa <beta(u), u> in extra_power so that energy_defect includes it.
SemiGalerkinResult run_penalized(SemiGalerkinConfig config, const ConvexSet& K, double kappa,
                                 const ScalarField& rho0, const GalerkinState& state0);

/// Projection of c onto K in the metric of A (the kappa -> infinity limit of
/// the penalty substep). Exact for L2Ball; other sets fall back to the L2
/// projection followed by the basis pairing.
Eigen::VectorXd project_in_metric(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const BasisSet& basis,
                                  const ConvexSet& K);

/// Same run with the penalty replaced by the hard projection
/// c <- project_in_metric(c, A(rho)) after every step.
SemiGalerkinResult run_projected(SemiGalerkinConfig config, const ConvexSet& K, const ScalarField& rho0,
                                 const GalerkinState& state0);

struct PenaltyStudyRow {
  double kappa = 0.0;
  /// sqrt(int_0^T |beta(u)|_2^2 dt)
  double beta_l2qt_norm = 0.0;
  /// max_t |beta(u(t))|_2, the L2 distance to K.
  double constraint_violation_max = 0.0;
  /// L2(Q_T) distance to the hard-projection trajectory (when available).
  double projection_gap = -1.0;
  double max_abs_energy_defect = 0.0;
};

struct PenaltyStudy {
  std::vector<PenaltyStudyRow> rows;
  bool strictly_decreasing = false;
  /// Least-squares slope of log beta_l2qt_norm against log kappa.
  double fitted_slope = 0.0;
};

/// Runs the configuration once per kappa (geometric, at least 3 values).
PenaltyStudy penalty_convergence_study(const SemiGalerkinConfig& config, const ConvexSet& K,
                                       const std::vector<double>& kappas, const ScalarField& rho0,
                                       const GalerkinState& state0, bool with_projection_reference = true);

struct TranslationReport {
  std::vector<double> h;
  std::vector<double> integral;
  double alpha = 0.0;
  bool ok = false;
};

/// int_0^{T-h} |sqrt(rho(t+h)) (u(t+h) - u(t))|_2^2 dt for each lag h given as a
/// positive multiple of the (uniform) storage stride; fits integral ~ c h^alpha.
TranslationReport time_translation_diagnostic(const std::vector<double>& times, const std::vector<ScalarField>& rho,
                                              const std::vector<VectorField>& u, const std::vector<int>& lags);
TranslationReport time_translation_diagnostic(const SemiGalerkinResult& run, const std::vector<int>& lags);

/// Spot check for a nested family K(t) = L2Ball(r(t)) with r nondecreasing:
/// returns max over stored t of |(1/h) int_{t-h}^t P_{K(s)} u(s) ds|_2 - r(t),
/// which is <= 0 when the running average stays in K(t).
double monotone_family_excess(const std::vector<double>& times, const std::vector<VectorField>& u,
                              const std::function<double(double)>& radius, int lag);

}  // namespace rheoflow
