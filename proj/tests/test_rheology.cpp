#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rheoflow/fields.hpp"
#include "rheoflow/rheology.hpp"

using namespace rheoflow;

namespace {

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const VectorField& v) {
  double m = 0.0;
  for (int a = 0; a < v.dim(); ++a) m = std::max(m, sup_norm(v[a]));
  return m;
}

double max_abs_diff(const VectorField& a, const VectorField& b) { return max_abs(a - b); }

}  // namespace

TEST(PowerLaw, ViscosityExamples) {
  EXPECT_DOUBLE_EQ(effective_viscosity(0.0, {1.7, 3.3}), 1.7);
  EXPECT_NEAR(effective_viscosity(3.0, {1.0, 4.0}), 4.0, 1e-15);
  EXPECT_NEAR(effective_viscosity(3.0, {2.0, 1.5}), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(effective_viscosity(-1.0, {1.0, 2.0}), std::domain_error);
  // Shear-thinning decreases, shear-thickening increases, Newtonian is flat.
  EXPECT_GT(effective_viscosity(1.0, {1.0, 1.5}), effective_viscosity(2.0, {1.0, 1.5}));
  EXPECT_LT(effective_viscosity(1.0, {1.0, 2.5}), effective_viscosity(2.0, {1.0, 2.5}));
  EXPECT_DOUBLE_EQ(effective_viscosity(5.0, {0.3, 2.0}), 0.3);
}

TEST(PowerLaw, ViscosityDerivativeMatchesFiniteDifference) {
  for (double p : {1.2, 1.5, 3.0, 4.0}) {
    PowerLawParams pp{0.7, p};
    for (double s : {0.0, 0.3, 2.0, 10.0}) {
      const double h = 1e-6 * (1.0 + s);
      const double fd = (effective_viscosity(s + h, pp) - effective_viscosity(std::max(0.0, s - h), pp)) /
                        (s + h - std::max(0.0, s - h));
      EXPECT_NEAR(effective_viscosity_derivative(s, pp), fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(PowerLaw, Thresholds) {
  PowerLawParams a{1.0, 2.2};
  EXPECT_TRUE(a.convective_ok());
  EXPECT_FALSE((PowerLawParams{1.0, 2.1}).convective_ok());
  // 1 + 2n/(n+1): n=2 -> 7/3, n=3 -> 5/2
  EXPECT_TRUE((PowerLawParams{1.0, 7.0 / 3.0}).weak_existence_ok(2));
  EXPECT_FALSE((PowerLawParams{1.0, 2.4}).weak_existence_ok(3));
  EXPECT_THROW((PowerLawParams{1.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((PowerLawParams{0.0, 2.0}).validate(), std::invalid_argument);
}

TEST(Deformation, Examples) {
  Grid g(2, 16);
  VectorField c(g, 1.5);
  for (auto& comp : deformation_tensor(c).comps) EXPECT_LT(sup_norm(comp), 1e-14);
  // Periodic shear (sin y, 0): D01 = cos(y)/2.
  VectorField sh = sample_vector(g, [](const Point& x) { return Point{std::sin(x[1]), 0.0, 0.0}; });
  SymTensorField D = deformation_tensor(sh);
  EXPECT_LT(max_abs_diff(D.at(0, 1), sample(g, [](const Point& x) { return 0.5 * std::cos(x[1]); })), 1e-14);
  EXPECT_LT(sup_norm(D.at(0, 0)), 1e-14);
  EXPECT_LT(sup_norm(D.at(1, 1)), 1e-14);
  // Periodic rotation-like field from a stream function has symmetric D with trace = div = 0.
  VectorField w = random_solenoidal_field(g, 4, 3);
  SymTensorField Dw = deformation_tensor(w);
  EXPECT_LT(sup_norm(Dw.at(0, 0) + Dw.at(1, 1)), 1e-13);
}

TEST(Deformation, ShearMatrixOnPointwiseLevel) {
  // u = (y, 0) -> D = [[0, 1/2], [1/2, 0]] evaluated on the matrix level.
  SmallMat grad;
  grad.dim = 2;
  grad(0, 1) = 1.0;
  SmallMat D;
  D.dim = 2;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) D(i, j) = 0.5 * (grad(i, j) + grad(j, i));
  EXPECT_DOUBLE_EQ(D(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(D(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(D(0, 0), 0.0);
}

TEST(Stress, Examples) {
  Grid g(2, 8);
  SymTensorField D(g);
  D.at(0, 0) = ScalarField(g, 1.0);
  D.at(1, 1) = ScalarField(g, -1.0);
  SymTensorField T = stress_tensor(D, {1.0, 4.0});
  EXPECT_NEAR(T.at(0, 0)[3], 3.0, 1e-15);
  EXPECT_NEAR(T.at(1, 1)[3], -3.0, 1e-15);
  EXPECT_NEAR(T.at(0, 1)[3], 0.0, 1e-15);
  SymTensorField Tn = stress_tensor(D, {2.5, 2.0});
  EXPECT_NEAR(Tn.at(0, 0)[0], 2.5, 1e-15);
  SymTensorField Z = stress_tensor(SymTensorField(g), {1.0, 1.5});
  for (auto& c : Z.comps) EXPECT_EQ(sup_norm(c), 0.0);
}

TEST(StressDivergence, NewtonianLimit) {
  Grid g(2, 32);
  VectorField u = sample_vector(g, [](const Point& x) { return Point{std::sin(x[1]), 0.0, 0.0}; });
  VectorField f = stress_divergence_direct(u, {1.0, 2.0});
  VectorField ref = sample_vector(g, [](const Point& x) { return Point{-std::sin(x[1]), 0.0, 0.0}; });
  EXPECT_LT(max_abs_diff(f, ref), 1e-12);
  EXPECT_LT(max_abs(stress_divergence_direct(VectorField(g), {1.0, 3.0})), 1e-15);
  EXPECT_LT(max_abs(stress_divergence_coeff(VectorField(g), {1.0, 3.0})), 1e-15);

  VectorField w = random_solenoidal_field(g, 8, 5);
  VectorField lap = laplacian(w);
  lap *= 0.7;
  EXPECT_LT(max_abs_diff(stress_divergence_direct(w, {0.7, 2.0}), lap), 1e-10);
  EXPECT_LT(max_abs_diff(stress_divergence_coeff(w, {0.7, 2.0}), lap), 1e-10);
}

TEST(StressDivergence, CrossFormIdentity) {
  for (int dim : {2, 3}) {
    Grid g(dim, dim == 2 ? 64 : 32);
    for (double p : {1.5, 3.0}) {
      for (std::uint64_t seed = 0; seed < (dim == 2 ? 5u : 2u); ++seed) {
        VectorField u = dim == 2 ? random_solenoidal_field(g, 50 + seed, 2, 0.5) : random_solenoidal_field(g, 50 + seed, 2, 0.3);
        VectorField a = stress_divergence_direct(u, {1.0, p});
        VectorField b = stress_divergence_coeff(u, {1.0, p});
        EXPECT_LT(max_abs_diff(a, b) / max_abs(a), 1e-8) << "dim " << dim << " p " << p;
      }
    }
  }
}

TEST(Dissipation, ExamplesAndKornNorm) {
  Grid g(2, 32);
  using std::numbers::pi;
  EXPECT_EQ(dissipation(VectorField(g), {1.0, 3.0}), 0.0);
  VectorField sh = sample_vector(g, [](const Point& x) { return Point{std::sin(x[1]), 0.0, 0.0}; });
  // |D|^2 = 2 * (cos(y)/2)^2 = cos^2(y)/2, integral = (1/2) * pi * 2 pi = pi^2
  EXPECT_NEAR(dissipation(sh, {1.3, 2.0}), 1.3 * pi * pi, 1e-11);
  EXPECT_NEAR(korn_norm(sh, 2.0), pi, 1e-12);
  VectorField sh2 = sh;
  sh2 *= 2.5;
  EXPECT_NEAR(korn_norm(sh2, 3.0), 2.5 * korn_norm(sh, 3.0), 1e-12);
  VectorField w = random_solenoidal_field(g, 2, 4);
  for (double p : {1.5, 3.0}) EXPECT_GT(dissipation(w, {1.0, p}), 0.0);
}

TEST(Monotonicity, FieldGap) {
  Grid g(2, 16);
  VectorField u1 = random_solenoidal_field(g, 1, 3), u2 = random_solenoidal_field(g, 2, 3);
  SymTensorField D1 = deformation_tensor(u1), D2 = deformation_tensor(u2);
  EXPECT_EQ(monotonicity_gap(D1, D1, {1.0, 1.5}), 0.0);
  // Newtonian: pointwise gap = mu0 |D1 - D2|^2.
  SymTensorField dD(g);
  for (std::size_t c = 0; c < dD.comps.size(); ++c) dD.comps[c] = D1.comps[c] - D2.comps[c];
  EXPECT_NEAR(monotonicity_gap(D1, D2, {2.0, 2.0}), 2.0 * min_value(double_dot(dD, dD)), 1e-13);
}

TEST(StructureConditions, RandomSamples) {
  for (int dim : {2, 3})
    for (double p : {1.2, 1.5, 2.0, 2.5, 4.0}) {
      StructureReport r = check_structure_conditions({0.8, p}, dim, 1000, 17);
      EXPECT_TRUE(r.ok()) << "p " << p << " mono " << r.monotonicity_failures << " coerc " << r.coercivity_failures
                          << " growth " << r.growth_failures << " frame " << r.frame_failures;
      EXPECT_GT(r.min_relative_gap, 0.0);
    }
}

TEST(StructureConditions, InjectedSignBugIsDetected) {
  PowerLawParams pp{1.0, 1.5};
  StressLaw bad = [pp](const SmallMat& A) { return -1.0 * power_law_stress(A, pp); };
  StructureReport r = check_structure_conditions(pp, 2, 200, 3, bad);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.monotonicity_failures, 200);
}
