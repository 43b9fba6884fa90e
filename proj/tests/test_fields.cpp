#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "rheoflow/fields.hpp"

using namespace rheoflow;
using std::numbers::pi;

namespace {

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (int c = 0; c < a.dim(); ++c) m = std::max(m, max_abs_diff(a[c], b[c]));
  return m;
}

// White-noise field: every mode populated, unlike the band-limited generator.
ScalarField noise(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed);
  ScalarField f(g);
  for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST(Grid, Validation) {
  EXPECT_THROW(Grid(4, 16), std::invalid_argument);
  EXPECT_THROW(Grid(2, 7), std::invalid_argument);
  EXPECT_THROW(Grid(2, 6), std::invalid_argument);
  Grid g(3, 8);
  EXPECT_EQ(g.size(), 512u);
  EXPECT_DOUBLE_EQ(g.spacing(), 2.0 * pi / 8.0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.flatten(g.unflatten(i)), i);
}

TEST(Spectral, ConstantIsZeroMode) {
  Grid g(2, 16);
  Spectrum s = to_spectral(ScalarField(g, 3.5));
  EXPECT_NEAR(s[0].real(), 3.5, 1e-15);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(std::abs(s[i]), 1e-15);
}

TEST(Spectral, CosineHasHalfAmplitudeModes) {
  Grid g(2, 16);
  Spectrum s = to_spectral(sample(g, [](const Point& x) { return std::cos(x[0]); }));
  EXPECT_NEAR(std::abs(coefficient(s, {1, 0, 0}) - cplx(0.5, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(coefficient(s, {-1, 0, 0}) - cplx(0.5, 0.0)), 0.0, 1e-15);
  double others = 0.0;
  const ModeTable& t = mode_table(g);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!(std::abs(t.k[i][0]) == 1 && t.k[i][1] == 0)) others += std::abs(s[i]);
  EXPECT_LT(others, 1e-14);
}

TEST(Spectral, RoundTripAndParsevalOnRandomFields) {
  for (int dim : {2, 3}) {
    Grid g(dim, dim == 2 ? 32 : 16);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      ScalarField f = noise(g, seed);
      ScalarField back = to_physical(to_spectral(f));
      ASSERT_LT(max_abs_diff(f, back), 1e-12);
      const double l2 = lp_norm(f, 2.0);
      ASSERT_NEAR(std::sqrt(spectral_l2_squared(to_spectral(f))), l2, 1e-12 * l2);
    }
  }
}

TEST(Spectral, AddRealModeMatchesSampledCosine) {
  Grid g(3, 8);
  Spectrum s(g);
  add_real_mode(s, {1, -2, 0}, cplx(0.5, 0.0));
  add_real_mode(s, {0, 1, 3}, cplx(0.0, -0.5));
  ScalarField f = to_physical(s);
  ScalarField ref = sample(g, [](const Point& x) { return std::cos(x[0] - 2 * x[1]) + std::sin(x[1] + 3 * x[2]); });
  EXPECT_LT(max_abs_diff(f, ref), 1e-13);
}

TEST(Operators, AnalyticExamples) {
  Grid g(2, 32);
  ScalarField c = sample(g, [](const Point& x) { return std::cos(x[0]); });
  VectorField gc = gradient(c);
  EXPECT_LT(max_abs_diff(gc[0], sample(g, [](const Point& x) { return -std::sin(x[0]); })), 1e-13);
  EXPECT_LT(sup_norm(gc[1]), 1e-14);

  ScalarField c2 = sample(g, [](const Point& x) { return std::cos(2 * x[0]); });
  EXPECT_LT(max_abs_diff(bilaplacian(c2), 16.0 * c2), 16.0 * 1e-12);
  EXPECT_LT(max_abs_diff(laplacian(c2), -4.0 * c2), 1e-12);
}

TEST(Operators, DivergenceOfGradientIsLaplacian) {
  for (int dim : {2, 3}) {
    Grid g(dim, 16);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ScalarField f = random_smooth_field(g, seed, 4);
      EXPECT_LT(max_abs_diff(divergence(gradient(f)), laplacian(f)), 1e-12);
    }
  }
}

TEST(Operators, LerayProjection) {
  Grid g(2, 32);
  ScalarField f = random_smooth_field(g, 7, 5);
  EXPECT_LT(sup_norm(leray_project(gradient(f))), 1e-13);

  VectorField w = random_solenoidal_field(g, 3, 5);
  EXPECT_LT(max_abs_diff(leray_project(w), w), 1e-13);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    VectorField v(g);
    v[0] = noise(g, 100 + seed);
    v[1] = noise(g, 200 + seed);
    VectorField pv = leray_project(v);
    EXPECT_LT(sup_norm(divergence(pv)), 1e-12);
    EXPECT_LT(max_abs_diff(leray_project(pv), pv), 1e-13);
  }
}

TEST(Operators, LerayProjection3D) {
  Grid g(3, 16);
  VectorField v(g);
  for (int a = 0; a < 3; ++a) v[a] = noise(g, 40 + a);
  VectorField pv = leray_project(v);
  EXPECT_LT(sup_norm(divergence(pv)), 1e-12);
  EXPECT_LT(max_abs_diff(leray_project(pv), pv), 1e-13);
}

TEST(Operators, PressureRecovery) {
  Grid g(2, 32);
  ScalarField c = sample(g, [](const Point& x) { return std::cos(x[0]); });
  // rhs = grad(cos x): Lap(pi) = div(rhs) = Lap(cos x), so pi = cos x.
  EXPECT_LT(max_abs_diff(pressure_recover(gradient(c)), c), 1e-13);
  EXPECT_LT(sup_norm(pressure_recover(random_solenoidal_field(g, 5, 4))), 1e-13);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    VectorField rhs(g);
    rhs[0] = noise(g, 300 + seed);
    rhs[1] = noise(g, 400 + seed);
    for (int a = 0; a < 2; ++a) {
      const double m = mean(rhs[a]);
      for (auto& v : rhs[a].values) v -= m;
    }
    ScalarField pi_ = pressure_recover(rhs);
    EXPECT_NEAR(mean(pi_), 0.0, 1e-14);
    VectorField recon = gradient(pi_) + leray_project(rhs);
    EXPECT_LT(max_abs_diff(recon, rhs), 1e-10);
  }
}

TEST(Operators, CommuteWithGridShift) {
  Grid g(2, 16);
  ScalarField f = random_smooth_field(g, 11, 4);
  auto shift = [&](const ScalarField& in, int axis) {
    ScalarField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[g.shifted(i, axis, 1)] = in[i];
    return out;
  };
  for (int axis = 0; axis < 2; ++axis) {
    EXPECT_LT(max_abs_diff(laplacian(shift(f, axis)), shift(laplacian(f), axis)), 1e-12);
    VectorField gs = gradient(shift(f, axis));
    VectorField sg = gradient(f);
    for (int a = 0; a < 2; ++a) EXPECT_LT(max_abs_diff(gs[a], shift(sg[a], axis)), 1e-12);
  }
}

TEST(Norms, ClosedForms) {
  Grid g(2, 32);
  const double V = g.volume();
  ScalarField c(g, -2.0);
  for (double p : {1.0, 2.0, 3.5}) EXPECT_NEAR(lp_norm(c, p), 2.0 * std::pow(V, 1.0 / p), 1e-12 * V);
  ScalarField cx = sample(g, [](const Point& x) { return std::cos(x[0]); });
  // integral of cos^2 x over [0,2pi)^2 = pi * 2pi
  EXPECT_NEAR(lp_norm(cx, 2.0), std::sqrt(2.0) * pi, 1e-12);
  EXPECT_NEAR(lp_norm(cx, 2.0) * lp_norm(cx, 2.0), l2_inner(cx, cx), 1e-12);
  EXPECT_NEAR(lp_norm(3.0 * cx, 4.0), 3.0 * lp_norm(cx, 4.0), 1e-12);
  EXPECT_DOUBLE_EQ(sup_norm(c), 2.0);
  EXPECT_THROW(lp_norm(c, 0.5), std::invalid_argument);
}

TEST(Interpolation, ConstantsAndNodes) {
  Grid g(2, 16);
  Interpolant ic(ScalarField(g, 4.25));
  EXPECT_NEAR(ic({0.37, 5.9, 0.0}), 4.25, 1e-14);
  ScalarField f = random_smooth_field(g, 9, 5);
  Interpolant ip(f);
  for (std::size_t i = 0; i < g.size(); i += 7) EXPECT_NEAR(ip(g.position(i)), f[i], 1e-14);
  // Wrapping: a point shifted by a full period gives the same value.
  EXPECT_NEAR(ip({0.3 + g.length, -0.2, 0.0}), ip({0.3, g.length - 0.2, 0.0}), 1e-13);
}

TEST(Interpolation, CosineAccuracyAndRefinement) {
  // Cubic Hermite error is O(h^4): at 64 points |err| ~ h^4/384 ~ 2e-7.
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    Grid g(2, n);
    Interpolant ip(sample(g, [](const Point& x) { return std::cos(x[0]); }));
    double err = 0.0;
    for (int j = 0; j < 200; ++j) {
      const double x = 0.1 + j * 0.0311;
      err = std::max(err, std::abs(ip({x, 1.0, 0.0}) - std::cos(x)));
    }
    if (n == 64) EXPECT_LT(err, 1e-6);
    if (prev > 0.0) EXPECT_GT(prev / err, 12.0);
    prev = err;
  }
  Grid g(2, 64);
  auto v = interpolate(sample(g, [](const Point& x) { return std::cos(x[0]); }), {{0.1, 0.0, 0.0}});
  EXPECT_NEAR(v[0], std::cos(0.1), 1e-6);
}

TEST(Interpolation, SpectralIsExactForTrigPolynomials) {
  Grid g(2, 16);
  auto fn = [](const Point& x) { return std::cos(2 * x[0] - x[1]) + 0.3 * std::sin(3 * x[1]); };
  Interpolant ip(sample(g, fn), InterpMethod::Spectral);
  for (Point p : {Point{0.123, 4.56, 0}, Point{3.3, 0.01, 0}}) EXPECT_NEAR(ip(p), fn(p), 1e-13);
}

TEST(Interpolation, ThreeDimensionalHermite) {
  Grid g(3, 16);
  auto fn = [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]) + std::cos(x[2]); };
  Interpolant ip(sample(g, fn));
  double err = 0.0;
  for (int j = 0; j < 50; ++j) {
    Point p{0.05 + 0.11 * j, 0.3 + 0.07 * j, 6.0 - 0.09 * j};
    err = std::max(err, std::abs(ip(p) - fn(p)));
  }
  EXPECT_LT(err, 2e-4);
}

TEST(Interpolation, ClampedStaysWithinCellRange) {
  Grid g(2, 16);
  ScalarField f(g, 0.0);
  f[g.flatten({5, 5, 0})] = 1.0;
  Interpolant ip(f);
  for (int j = 0; j < 400; ++j) {
    Point p{0.01 * j, 0.013 * j, 0.0};
    const double v = ip.clamped(p);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(WeightedProjection, ConstantDensityMatchesLeray) {
  Grid g(2, 32);
  VectorField v(g);
  v[0] = random_smooth_field(g, 1, 6);
  v[1] = random_smooth_field(g, 2, 6);
  auto r = weighted_project(v, ScalarField(g, 2.0));
  VectorField ref = leray_project(v);
  ref *= 0.5;
  EXPECT_LT(max_abs_diff(r.accel, ref), 1e-12);
}

TEST(WeightedProjection, SolvesVariableCoefficientProblem) {
  Grid g(2, 32);
  ScalarField rho = sample(g, [](const Point& x) { return 1.0 + 0.5 * std::sin(x[0]) * std::cos(x[1]); });
  VectorField v(g);
  v[0] = random_smooth_field(g, 3, 5);
  v[1] = random_smooth_field(g, 4, 5);
  auto r = weighted_project(v, rho);
  EXPECT_LT(r.residual, 1e-12);
  EXPECT_LT(sup_norm(divergence(r.accel)), 1e-11);
  // g - rho * a must be a gradient: its Leray projection vanishes (up to aliasing of the product).
  VectorField resid = v - scale(rho, r.accel);
  EXPECT_LT(sup_norm(leray_project(resid)), 1e-9);
  EXPECT_THROW(weighted_project(v, ScalarField(g, 0.0)), std::domain_error);
}

TEST(Random, CounterGeneratorIsReproducible) {
  CounterRng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(CounterRng::draw(42, 5), CounterRng(42, 5).next_u64());
  // Reference values of splitmix64 for seed 0.
  EXPECT_EQ(CounterRng::draw(0, 0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(CounterRng::draw(0, 1), 0x6E789E6AA1B965F4ULL);
  ScalarField f1 = random_smooth_field(Grid(2, 16), 5, 3), f2 = random_smooth_field(Grid(2, 16), 5, 3);
  EXPECT_EQ(f1.values, f2.values);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Grid g(2, 16);
  Checkpoint cp;
  cp.grid = g;
  cp.fields.emplace_back("rho", random_smooth_field(g, 1, 4));
  cp.fields.emplace_back("u0", random_smooth_field(g, 2, 4));
  const std::string path = ::testing::TempDir() + "rf_cp_test.nnf";
  save_checkpoint(path, cp);
  Checkpoint back = load_checkpoint(path);
  ASSERT_EQ(back.fields.size(), 2u);
  EXPECT_EQ(back.grid, g);
  EXPECT_EQ(back.get("rho").values, cp.get("rho").values);
  EXPECT_EQ(back.get("u0").values, cp.get("u0").values);
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  char magic[5] = {};
  ASSERT_EQ(std::fread(magic, 1, 4, fp), 4u);
  std::fclose(fp);
  EXPECT_STREQ(magic, "NNF1");
  std::remove(path.c_str());
}
