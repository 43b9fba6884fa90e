#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "rheoflow/fields.hpp"
#include "rheoflow/log.hpp"
#include "rheoflow/transport.hpp"

using namespace rheoflow;
using std::numbers::pi;

namespace {

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

VectorField constant_velocity(const Grid& g, double ux, double uy) {
  VectorField u(g);
  u[0] = ScalarField(g, ux);
  u[1] = ScalarField(g, uy);
  return u;
}

// Smooth bump positive everywhere.
ScalarField bump(const Grid& g, double cx, double cy, double sigma) {
  return sample(g, [=](const Point& x) {
    double dx = x[0] - cx, dy = x[1] - cy;
    return 1.0 + std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
  });
}

}  // namespace

TEST(Advect, ZeroVelocityIsIdentity) {
  Grid g(2, 16);
  ScalarField r = random_smooth_field(g, 3, 4, 1.0);
  ScalarField out = advect_step(r, VectorField(g), 0.1);
  EXPECT_EQ(max_abs_diff(r, out), 0.0);
}

TEST(Advect, IntegerCellShiftIsExact) {
  Grid g(2, 32);
  ScalarField r = random_smooth_field(g, 7, 6, 1.0);
  const double h = g.spacing(), dt = 0.05;
  ScalarField out = advect_step(r, constant_velocity(g, h / dt, 0.0), dt, {InterpMethod::Cubic, std::nullopt});
  // rho_new(i, j) = rho(i - 1, j)
  double m = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const std::size_t a = g.flatten({i, j, 0}), b = g.flatten({(i + g.n - 1) % g.n, j, 0});
      m = std::max(m, std::abs(out[a] - r[b]));
    }
  EXPECT_LT(m, 1e-13);
}

TEST(Advect, TranslationMatchesAnalytic) {
  for (int n : {32, 64}) {
    Grid g(2, n);
    ScalarField r = sample(g, [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); });
    const double dt = 0.013, cx = 0.7, cy = -0.4;
    ScalarField out = advect_step(r, constant_velocity(g, cx, cy), dt);
    ScalarField ref = sample(g, [=](const Point& x) { return std::sin(x[0] - cx * dt) * std::cos(x[1] - cy * dt); });
    EXPECT_LT(max_abs_diff(out, ref), n == 32 ? 1e-5 : 1e-6);
  }
}

TEST(Advect, RotationPreservesBoundsAndApproximatelyMass) {
  Grid g(2, 64);
  const double c = pi;
  // Divergence-free rotation confined to a disk, zero near the box edges.
  VectorField u = sample_vector(g, [=](const Point& x) {
    const double X = x[0] - c, Y = x[1] - c, r = std::hypot(X, Y);
    const double chi = 0.5 * std::erfc((r - 2.4) / 0.2);
    return Point{-Y * chi, X * chi, 0.0};
  });
  EXPECT_LT(sup_norm(divergence(u)), 5e-3);
  ScalarField rho = bump(g, c + 1.0, c, 0.4);
  const double m0 = integrate(rho), lo = min_value(rho), hi = max_value(rho);
  const double dt = 0.02;
  VectorInterpolant ui(u);
  const AdvectOptions opt{InterpMethod::Cubic, DensityBounds{lo, hi}};
  for (int s = 0; s < 50; ++s) rho = advect_step(rho, ui, dt, opt);
  EXPECT_GE(min_value(rho), lo - 1e-14);
  EXPECT_LE(max_value(rho), hi + 1e-14);
  EXPECT_LT(std::abs(integrate(rho) - m0) / m0, 1e-3);
}

TEST(Advect, LargeCflWarnsButRuns) {
  Grid g(2, 16);
  int warnings = 0;
  set_warning_sink([&](const std::string&) { ++warnings; });
  ScalarField r = random_smooth_field(g, 1, 3, 1.0);
  ScalarField out = advect_step(r, constant_velocity(g, 10.0, 0.0), 0.2);
  set_warning_sink({});
  EXPECT_EQ(warnings, 1);
  EXPECT_TRUE(out.all_finite());
  EXPECT_NEAR(cfl_number(constant_velocity(g, 10.0, 0.0), 0.2), 10.0 * 0.2 / g.spacing(), 1e-12);
}

TEST(Regularized, FdSymbolMatchesStencil) {
  Grid g(2, 12);
  const std::array<int, 3> k{2, -3, 0};
  ScalarField f = sample(g, [&](const Point& x) { return std::cos(k[0] * x[0] + k[1] * x[1]); });
  const double h = g.spacing();
  const double lam = fd_laplacian_symbol(g, k);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      auto at = [&](int a, int b) { return f[g.flatten({(a + g.n) % g.n, (b + g.n) % g.n, 0})]; };
      const double st = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4 * at(i, j)) / (h * h);
      EXPECT_NEAR(st, lam * at(i, j), 1e-11);
    }
}

TEST(Regularized, MatchesDenseSolveWithoutAdvection) {
  Grid g(2, 8);
  const int n = g.n, N = n * n;
  const double h = g.spacing(), eps = 0.3, dt = 0.07;
  ScalarField rho = random_smooth_field(g, 11, 3, 0.5), prev = random_smooth_field(g, 12, 3, 0.5);
  rho += ScalarField(g, 1.0);
  prev += ScalarField(g, 1.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int r = static_cast<int>(g.flatten({i, j, 0}));
      A(r, r) += 1.0 + dt + 4.0 * dt * eps / (h * h);
      for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const int c = static_cast<int>(g.flatten({(i + di + n) % n, (j + dj + n) % n, 0}));
        A(r, c) -= dt * eps / (h * h);
      }
      b(r) = rho[r] + dt * prev[r];
    }
  Eigen::VectorXd x = A.lu().solve(b);
  ScalarField out = regularized_continuity_step(rho, prev, VectorField(g), eps, dt);
  for (int r = 0; r < N; ++r) EXPECT_NEAR(out[r], x(r), 1e-13);
}

TEST(Regularized, MaximumPrincipleWithAdvection) {
  Grid g(2, 32);
  VectorField u = random_solenoidal_field(g, 5, 3, 1.0);
  ScalarField rho = random_smooth_field(g, 21, 5, 0.6), prev = random_smooth_field(g, 22, 5, 0.6);
  rho += ScalarField(g, 1.0);
  prev += ScalarField(g, 1.0);
  const double lo = std::min(min_value(rho), min_value(prev)), hi = std::max(max_value(rho), max_value(prev));
  VectorInterpolant ui(u);
  for (int s = 0; s < 40; ++s) {
    rho = regularized_continuity_step(rho, prev, &ui, 0.05, 0.05);
    EXPECT_GE(min_value(rho), lo - 1e-13);
    EXPECT_LE(max_value(rho), hi + 1e-13);
  }
  // Steady state with rho_prev = const and u = 0 is that constant.
  ScalarField c(g, 1.7), r = rho;
  for (int s = 0; s < 400; ++s) r = regularized_continuity_step(r, c, nullptr, 0.1, 0.1);
  EXPECT_LT(max_abs_diff(r, c), 1e-10);
}

TEST(KssDiffusion, PureDiffusionDecaysExactly) {
  Grid g(2, 32);
  const DiffusionParams p{0.3, 0.05, 0.0};
  ScalarField r = sample(g, [](const Point& x) { return 2.0 + std::cos(2 * x[0] + x[1]); });
  const double k2 = 5.0, dt = 0.1;
  ScalarField out = r;
  for (int s = 0; s < 10; ++s) out = kss_diffusion_step(out, VectorField(g), p, dt);
  const double decay = std::exp(-p.lambda * (k2 + p.mobility * k2 * k2) * 1.0);
  ScalarField ref = sample(g, [=](const Point& x) { return 2.0 + decay * std::cos(2 * x[0] + x[1]); });
  EXPECT_LT(max_abs_diff(out, ref), 1e-13);
}

TEST(KssDiffusion, UniformDriftMatchesAnalytic) {
  Grid g(2, 32);
  const DiffusionParams p{0.2, 0.0, 0.0};
  const double cx = 0.8, cy = 0.3;
  ScalarField r = sample(g, [](const Point& x) { return 1.0 + std::sin(x[0] + 2 * x[1]); });
  VectorField psi = constant_velocity(g, cx, cy);
  const double dt = 0.01, T = 0.5;
  for (int s = 0; s < 50; ++s) r = kss_diffusion_step(r, psi, p, dt);
  ScalarField ref = sample(g, [=](const Point& x) {
    return 1.0 + std::exp(-p.lambda * 5.0 * T) * std::sin(x[0] - cx * T + 2 * (x[1] - cy * T));
  });
  EXPECT_LT(max_abs_diff(r, ref), 1e-9);
}

TEST(KssDiffusion, FourthOrderInTime) {
  Grid g(2, 32);
  const DiffusionParams p{0.05, 0.01, 0.0};
  VectorField psi = random_solenoidal_field(g, 9, 2, 1.0);
  ScalarField r0 = random_smooth_field(g, 10, 3, 0.5);
  r0 += ScalarField(g, 1.0);
  auto run = [&](int steps) {
    ScalarField r = r0;
    for (int s = 0; s < steps; ++s) r = kss_diffusion_step(r, psi, p, 0.5 / steps);
    return r;
  };
  ScalarField ref = run(320);
  const double e1 = max_abs_diff(run(10), ref), e2 = max_abs_diff(run(20), ref);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(KssDiffusion, MassConservedAndL2Decreasing) {
  Grid g(2, 48);
  const DiffusionParams p{0.02, 0.01, 0.0};
  VectorField psi = random_solenoidal_field(g, 13, 3, 1.0);
  ScalarField r = random_smooth_field(g, 14, 4, 0.5);
  r += ScalarField(g, 1.0);
  const double m0 = integrate(r);
  double l2 = lp_norm(r, 2.0);
  for (int s = 0; s < 40; ++s) {
    r = kss_diffusion_step(r, psi, p, 0.02);
    const double now = lp_norm(r, 2.0);
    EXPECT_LE(now, l2 * (1 + 1e-12));
    l2 = now;
  }
  EXPECT_LT(std::abs(integrate(r) - m0) / m0, 1e-13);
}

TEST(KssDiffusion, RejectsBadArguments) {
  Grid g(2, 8);
  EXPECT_THROW(kss_diffusion_step(ScalarField(g), VectorField(g), {-1.0, 0.0, 0.0}, 0.1), std::invalid_argument);
  EXPECT_THROW(kss_diffusion_step(ScalarField(g), VectorField(g), {1.0, 0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST(Ladder, SimulatedSeriesHoldsAllLevels) {
  Grid g(2, 48);
  for (double dm : {0.0, 0.02}) {
    const DiffusionParams p{0.05, dm, 0.0};
    VectorField psi = random_solenoidal_field(g, 31, 3, 1.0);
    ScalarField r = random_smooth_field(g, 32, 4, 0.5);
    r += ScalarField(g, 1.0);
    std::vector<double> t{0.0};
    std::vector<ScalarField> series{r};
    const double dt = 0.01;
    for (int s = 1; s <= 100; ++s) {
      r = kss_diffusion_step(r, psi, p, dt);
      t.push_back(s * dt);
      series.push_back(r);
    }
    LadderReport rep = diffusion_estimate_ladder(t, series, {psi}, p);
    ASSERT_EQ(rep.levels.size(), 5u);
    for (const auto& lv : rep.levels) EXPECT_FALSE(lv.flagged) << lv.name << " ratio " << lv.max_ratio;
    EXPECT_FALSE(rep.any_flag);
    // The energy level is an identity: the ratio sits at one.
    EXPECT_NEAR(rep.levels[0].max_ratio, 1.0, 1e-4);
    EXPECT_GT(rep.h1h2_integral.back(), 0.0);
  }
}

TEST(Ladder, InflatedSeriesIsFlagged) {
  Grid g(2, 16);
  const DiffusionParams p{0.1, 0.0, 0.0};
  ScalarField r = random_smooth_field(g, 40, 3, 0.5);
  std::vector<double> t;
  std::vector<ScalarField> series;
  for (int s = 0; s <= 10; ++s) {
    ScalarField x = r;
    x *= 1.0 + 0.05 * s;
    t.push_back(0.1 * s);
    series.push_back(x);
  }
  LadderReport rep = diffusion_estimate_ladder(t, series, {VectorField(g)}, p);
  EXPECT_TRUE(rep.levels[0].flagged);
  EXPECT_TRUE(rep.any_flag);
  EXPECT_THROW(diffusion_estimate_ladder(t, series, {VectorField(g)}, {0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(DensityInvariants, ConstantSeriesHasNoDrift) {
  Grid g(2, 16);
  ScalarField r(g, 2.0);
  DensityInvariantReport rep = density_invariants({r, r, r});
  EXPECT_NEAR(rep.mass[0], 2.0 * 4 * pi * pi, 1e-12);
  EXPECT_NEAR(rep.l4[1], std::pow(16.0 * 4 * pi * pi, 0.25), 1e-12);
  EXPECT_EQ(rep.max_mass_drift, 0.0);
  EXPECT_EQ(rep.overall_min, 2.0);
  ScalarField r2(g, 2.2);
  rep = density_invariants({r, r2});
  EXPECT_NEAR(rep.max_mass_drift, 0.1, 1e-14);
  EXPECT_EQ(rep.overall_max, 2.2);
}

TEST(Advect, ForwardThenBackwardReturnsInitialData) {
  Grid g(2, 64);
  VectorField u = random_solenoidal_field(g, 61, 2, 1.0);
  VectorField back = u;
  back *= -1.0;
  ScalarField r0 = random_smooth_field(g, 62, 4, 0.5);
  r0 += ScalarField(g, 1.0);
  const double dt = 0.01;
  ScalarField r = advect_step(advect_step(r0, u, dt), back, dt);
  EXPECT_LT(max_abs_diff(r, r0), 2e-6);
  EXPECT_LT(std::abs(integrate(advect_step(r0, u, dt)) - integrate(r0)) / integrate(r0), 1e-6);
}

TEST(Ladder, SingleModeClosedForm) {
  Grid g(2, 32);
  const DiffusionParams p{0.1, 0.02, 0.0};
  const double k2 = 2.0, rate = p.lambda * (k2 + p.mobility * k2 * k2);
  ScalarField r = sample(g, [](const Point& x) { return std::cos(x[0] + x[1]); });
  std::vector<double> t;
  std::vector<ScalarField> series;
  for (int s = 0; s <= 20; ++s) {
    t.push_back(0.05 * s);
    series.push_back(r);
    r = kss_diffusion_step(r, VectorField(g), p, 0.05);
  }
  LadderReport rep = diffusion_estimate_ladder(t, series, {VectorField(g)}, p);
  const double V = g.volume();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = std::exp(-2 * rate * t[i]);
    EXPECT_NEAR(rep.rho_l2sq[i], 0.5 * V * e, 1e-11);
    EXPECT_NEAR(rep.grad_l2sq[i], 0.5 * V * k2 * e, 1e-11);
    EXPECT_NEAR(rep.lap_l2sq[i], 0.5 * V * k2 * k2 * e, 1e-11);
    EXPECT_NEAR(rep.gradlap_l2sq[i], 0.5 * V * k2 * k2 * k2 * e, 1e-10);
    if (i > 0) EXPECT_LT(rep.rho_l2sq[i], rep.rho_l2sq[i - 1]);
  }
  EXPECT_FALSE(rep.any_flag);
}
