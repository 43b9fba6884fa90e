#pragma once

#include "rheoflow/grid.hpp"
#include "rheoflow/spectral.hpp"

namespace rheoflow {

/// Per-component spectra of a vector field.
struct VectorSpectrum {
  Grid grid;
  std::vector<Spectrum> comps;

  VectorSpectrum() = default;
  explicit VectorSpectrum(const Grid& g);
  Spectrum& operator[](int a) { return comps[a]; }
  const Spectrum& operator[](int a) const { return comps[a]; }
};

VectorSpectrum to_spectral(const VectorField& v);
VectorField to_physical(const VectorSpectrum& s);

// Spectral-space kernels. Odd derivatives drop Nyquist components.
Spectrum derivative(const Spectrum& s, int axis);
Spectrum second_derivative(const Spectrum& s, int a, int b);
Spectrum laplacian(const Spectrum& s);
Spectrum divergence(const VectorSpectrum& v);
void leray_project_inplace(VectorSpectrum& v);
/// Solves Lap(x) = s for the mean-free part; zero mode of the result is zero.
Spectrum inverse_laplacian(const Spectrum& s);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
ScalarField bilaplacian(const ScalarField& f);
VectorField laplacian(const VectorField& v);
/// Full velocity gradient: result[i][j] = d_j v_i.
std::vector<VectorField> velocity_gradient(const VectorField& v);
/// (a . grad) b, each component dealiased.
VectorField directional_derivative(const VectorField& a, const VectorField& b);

VectorField leray_project(const VectorField& v);
ScalarField pressure_recover(const VectorField& rhs);

/// Variable-density projection: returns the divergence-free acceleration
/// a = (g - grad phi) / rho_bar with div(rho_bar^-1 (g - grad phi)) = 0.
/// Solved by preconditioned conjugate gradients with a constant-coefficient
/// spectral preconditioner.
struct WeightedProjectionResult {
  VectorField accel;
  ScalarField phi;
  int iterations = 0;
  double residual = 0.0;
};
WeightedProjectionResult weighted_project(const VectorField& g, const ScalarField& rho_bar,
                                          double tol = 1e-13, int max_iter = 500,
                                          const ScalarField* phi_guess = nullptr);

// Quadrature and norms (rectangle rule, exact for resolved trigonometric polynomials).
double integrate(const ScalarField& f);
double mean(const ScalarField& f);
double l2_inner(const ScalarField& a, const ScalarField& b);
double l2_inner(const VectorField& a, const VectorField& b);
double lp_norm(const ScalarField& f, double p);
/// L_p norm of the pointwise Euclidean magnitude.
double lp_norm(const VectorField& v, double p);
double sup_norm(const ScalarField& f);
double sup_norm(const VectorField& v);
double min_value(const ScalarField& f);
double max_value(const ScalarField& f);

}  // namespace rheoflow
