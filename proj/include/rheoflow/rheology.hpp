#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "rheoflow/grid.hpp"
#include "rheoflow/operators.hpp"

namespace rheoflow {

/// Power-law viscosity nu(s) = mu0 (1 + s)^((p-2)/2), s = |D|^2 (Frobenius).
/// The stress is T = nu(|D|^2) D and the momentum equation carries div(2T),
/// so p = 2 gives the Newtonian force mu0 * Lap(u).
struct PowerLawParams {
  double mu0 = 1.0;
  double p = 2.0;

  void validate() const;
  /// p >= 1 + 2n/(n+1)
  bool weak_existence_ok(int n) const { return p >= 1.0 + 2.0 * n / (n + 1.0); }
  /// p >= 11/5
  bool convective_ok() const { return p >= 11.0 / 5.0; }
  /// Emits advisory warnings for sub-critical exponents; never throws.
  void warn_thresholds(int n) const;
};

double effective_viscosity(double s, const PowerLawParams& params);
/// d nu / d s
double effective_viscosity_derivative(double s, const PowerLawParams& params);

/// Dense symmetric matrix used for pointwise constitutive checks.
struct SmallMat {
  int dim = 2;
  std::array<std::array<double, 3>, 3> a{};
  double operator()(int i, int j) const { return a[i][j]; }
  double& operator()(int i, int j) { return a[i][j]; }
};

double frobenius_squared(const SmallMat& m);
double ddot(const SmallMat& x, const SmallMat& y);
SmallMat operator-(const SmallMat& x, const SmallMat& y);
SmallMat operator*(double s, const SmallMat& x);

/// A pointwise stress law A -> T(A). The default is the power law.
using StressLaw = std::function<SmallMat(const SmallMat&)>;
SmallMat power_law_stress(const SmallMat& A, const PowerLawParams& params);
StressLaw power_law(const PowerLawParams& params);

SymTensorField deformation_tensor(const VectorField& u);
SymTensorField stress_tensor(const SymTensorField& D, const PowerLawParams& params);
/// Pointwise |D|^2.
ScalarField frobenius_squared(const SymTensorField& D);

/// Force density div(2 T(D(u))) from the conservative form; T is dealiased before differentiation.
VectorField stress_divergence_direct(const VectorField& u, const PowerLawParams& params);
VectorSpectrum stress_divergence_direct(const VectorSpectrum& u_hat, const PowerLawParams& params);
/// The same force from the expanded form sum_jkl t_ij^kl d_k d_l u_j with
/// Quasilinear operator with frozen coefficients: div(2 nu(|D v|^2) D u).
/// Equals stress_divergence_direct when v = u.
VectorSpectrum frozen_stress_divergence(const VectorField& v, const VectorSpectrum& u_hat,
                                        const PowerLawParams& params);

/// t_ij^kl = nu delta_kl delta_ij + 4 nu' d_ik d_jl (valid for divergence-free u).
VectorField stress_divergence_coeff(const VectorField& u, const PowerLawParams& params);

/// Integral of T(D(u)) : D(u).
double dissipation(const VectorField& u, const PowerLawParams& params);
/// (integral |D(u)|^p)^(1/p)
double korn_norm(const VectorField& u, double p);
/// Pointwise minimum of (T(D1) - T(D2)) : (D1 - D2).
double monotonicity_gap(const SymTensorField& D1, const SymTensorField& D2, const PowerLawParams& params);

/// Randomized verification of the structure conditions on matrix samples.
struct StructureReport {
  int samples = 0;
  int monotonicity_failures = 0;
  int coercivity_failures = 0;
  int growth_failures = 0;
  int frame_failures = 0;
  /// Smallest observed gap / (nu_min-type scale * |A-B|^2); positive when monotone.
  double min_relative_gap = 0.0;
  bool ok() const {
    return monotonicity_failures == 0 && coercivity_failures == 0 && growth_failures == 0 && frame_failures == 0;
  }
};
StructureReport check_structure_conditions(const PowerLawParams& params, int dim, int samples, std::uint64_t seed,
                                           const StressLaw& law = {});

}  // namespace rheoflow
