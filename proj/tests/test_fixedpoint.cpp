#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rheoflow/fixedpoint.hpp"
#include "rheoflow/random.hpp"

using namespace rheoflow;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField smooth_density(const Grid& g, std::uint64_t seed, double lo, double hi) {
  CounterRng rng(seed);
  const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), ph = kTwoPi * rng.uniform();
  ScalarField r = sample(g, [&](const Point& x) {
    return a * std::sin(x[0] + ph) + b * std::cos(2 * x[1]) + c * std::sin(x[0] - x[1]);
  });
  const double mn = min_value(r), mx = max_value(r);
  for (auto& v : r.values) v = lo + (hi - lo) * (v - mn) / (mx - mn);
  return r;
}

// Dense five-point Laplacian on the torus, assembled entry by entry.
Eigen::MatrixXd dense_fd_laplacian(const Grid& g) {
  const auto N = static_cast<Eigen::Index>(g.size());
  const double h2 = g.spacing() * g.spacing();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(p);
    L(i, i) -= 2.0 * g.dim / h2;
    for (int a = 0; a < g.dim; ++a)
      for (int s : {-1, 1}) L(i, static_cast<Eigen::Index>(g.shifted(p, a, s))) += 1.0 / h2;
  }
  return L;
}

struct PeriodicSetup {
  Grid g{2, 32};
  std::shared_ptr<const BasisSet> basis = build_basis(g, 8);
  VectorField w0 = basis->mode_field(0), w3 = basis->mode_field(3);

  PeriodicProblem problem(double amp) const {
    PeriodicProblem pb;
    pb.period = 1.0;
    pb.reg_eps = 2.0;
    pb.alpha = 0.5;
    pb.beta = 1.5;
    if (amp != 0.0)
      pb.forcing = [this, amp](double t) {
        return amp * std::sin(kTwoPi * t) * w0 + 0.5 * amp * std::cos(kTwoPi * t) * w3;
      };
    return pb;
  }
  PeriodicConfig config() const {
    PeriodicConfig c;
    c.basis = basis;
    c.params = {1.0, 2.0};
    c.steps = 100;
    c.tol = 1e-8;
    return c;
  }
};

}  // namespace

TEST(MapS, SteadyStateIsFixed) {
  Grid g(2, 16);
  const double eps = 0.5;
  ScalarField q = smooth_density(g, 7, 0.7, 1.3);
  const Eigen::MatrixXd L = dense_fd_laplacian(g);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(L.rows(), L.cols()) - eps * L;
  Eigen::VectorXd qv = Eigen::Map<const Eigen::VectorXd>(q.values.data(), L.rows());
  Eigen::VectorXd sv = M.partialPivLu().solve(qv);
  ScalarField steady(g, std::vector<double>(sv.data(), sv.data() + sv.size()));
  PeriodicProblem pb;
  pb.reg_eps = eps;
  pb.alpha = 0.5;
  pb.beta = 1.5;
  LaggedFields lag;
  lag.density = [&](int) { return q; };
  ScalarField out = map_S(steady, pb, 50, lag);
  EXPECT_LT(sup_norm(out - steady), 1e-8);
}

TEST(MapS, ConstantStaysConstant) {
  Grid g(2, 16);
  PeriodicProblem pb;
  ScalarField c(g, 1.2);
  LaggedFields lag;
  lag.density = [&](int) { return c; };
  EXPECT_LT(sup_norm(map_S(c, pb, 20, lag) - c), 1e-14);
}

TEST(MapS, ContractionAndMaximumPrinciple) {
  PeriodicSetup S;
  PeriodicProblem pb = S.problem(0.0);
  pb.reg_eps = 0.05;
  const VectorField u = 0.8 * S.basis->mode_field(0) + 0.6 * S.basis->mode_field(5);
  ScalarField target = smooth_density(S.g, 99, 0.6, 1.4);
  LaggedFields lag;
  lag.velocity = [&](int) { return u; };
  lag.density = [&](int) { return target; };
  for (std::uint64_t s = 0; s < 6; ++s) {
    ScalarField a = smooth_density(S.g, 2 * s, 0.5, 1.5), b = smooth_density(S.g, 2 * s + 1, 0.55, 1.45);
    ScalarField Sa = map_S(a, pb, 40, lag), Sb = map_S(b, pb, 40, lag);
    EXPECT_GE(min_value(Sa), pb.alpha - 1e-8);
    EXPECT_LE(max_value(Sa), pb.beta + 1e-8);
    const double ratio = lp_norm(Sa - Sb, 2.0) / lp_norm(a - b, 2.0);
    EXPECT_LT(ratio, 1.0);
    // The zeroth-order relaxation alone gives exp(-T); diffusion only helps.
    EXPECT_LT(ratio, std::exp(-pb.period) * 1.05);
  }
}

TEST(MapS, RejectsInadmissibleData) {
  Grid g(2, 16);
  PeriodicProblem pb;
  LaggedFields lag;
  lag.density = [&](int) { return ScalarField(g, 1.0); };
  EXPECT_THROW(map_S(ScalarField(g, 2.0), pb, 10, lag), std::invalid_argument);
  pb.alpha = 0.0;
  EXPECT_THROW(map_S(ScalarField(g, 1.0), pb, 10, lag), std::invalid_argument);
}

TEST(PeriodicSolve, ZeroForcingConvergesInOneIteration) {
  PeriodicSetup S;
  PeriodicResult r = periodic_solve(S.problem(0.0), S.config());
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT(sup_norm(r.rho - ScalarField(S.g, 1.0)), 1e-14);
  EXPECT_EQ(r.coeffs.norm(), 0.0);
}

TEST(PeriodicSolve, SmallForcingConvergesAndReplaysPeriodically) {
  PeriodicSetup S;
  PeriodicConfig cfg = S.config();
  cfg.rho_start = sample(S.g, [](const Point& x) { return 1.0 + 0.2 * std::sin(x[0]); });
  const PeriodicProblem pb = S.problem(1.0);
  PeriodicResult r = periodic_solve(pb, cfg);
  ASSERT_TRUE(r.converged);
  for (std::size_t k = 1; k < r.log.size(); ++k) {
    EXPECT_LT(r.log[k].contraction_ratio, 1.0) << k;
    EXPECT_LT(r.log[k].s_ratio, 1.0) << k;
    EXPECT_LT(r.log[k].z_ratio, 1.0) << k;
  }
  EXPECT_LE(r.replay_mismatch, 2.0 * cfg.tol);
  EXPECT_GT(r.coeffs.norm(), 1e-3);
  EXPECT_GT(r.z_rate, 0.0);
  EXPECT_LE(r.max_start_energy, r.ball_radius_required);
  // Periodic density is uniform: diffusion removes every nonzero mode.
  EXPECT_LT(max_value(r.rho) - min_value(r.rho), 1e-8);
  // Semi-Lagrangian transport is not exactly conservative.
  EXPECT_NEAR(mean(r.rho), 1.0, 1e-8);

  // The returned trajectory closes on itself.
  EXPECT_LE(periodic_distance(r.trajectory.rho.front(), r.trajectory.coeffs.front(), r.trajectory.rho.back(),
                              r.trajectory.coeffs.back(), *S.basis),
            2.0 * cfg.tol);
}

TEST(PeriodicSolve, GrowingDataAbortsWithLog) {
  PeriodicSetup S;
  PeriodicProblem pb = S.problem(0.0);
  int calls = 0;
  pb.forcing = [&](double) { return (1.0 + 0.05 * calls++) * S.w0; };
  PeriodicConfig cfg = S.config();
  cfg.steps = 20;
  cfg.measure_maps = false;
  try {
    periodic_solve(pb, cfg);
    FAIL() << "expected FixedPointAbort";
  } catch (const FixedPointAbort& e) {
    EXPECT_GE(e.log.size(), 6u);
    for (std::size_t k = e.log.size() - 5; k < e.log.size(); ++k) EXPECT_GE(e.log[k].contraction_ratio, 1.0);
  }
}

TEST(PeriodicSolve, MapZContractsAlongFixedDensity) {
  PeriodicSetup S;
  const PeriodicProblem pb = S.problem(1.0);
  PeriodicConfig cfg = S.config();
  cfg.steps = 50;
  ScalarField rho = sample(S.g, [](const Point& x) { return 1.0 + 0.3 * std::cos(x[1]); });
  PeriodicTrajectory lag;
  lag.rho.assign(51, rho);
  lag.coeffs.assign(51, Eigen::VectorXd::Constant(8, 0.1));
  Eigen::VectorXd a = Eigen::VectorXd::Zero(8), b = Eigen::VectorXd::Zero(8);
  b[1] = 1.0;
  b[6] = -0.5;
  PeriodicTrajectory path = periodic_pass(rho, a, pb, cfg, lag);
  const Eigen::VectorXd Za = map_Z(a, path, pb, cfg, lag), Zb = map_Z(b, path, pb, cfg, lag);
  EXPECT_LT((Za - path.coeffs.back()).norm(), 1e-14);
  const VectorField d0 = S.basis->reconstruct(b - a), dT = S.basis->reconstruct(Zb - Za);
  const double before = std::sqrt(integrate(hadamard(rho, dot(d0, d0))));
  const double after = std::sqrt(integrate(hadamard(path.rho.back(), dot(dT, dT))));
  EXPECT_LT(after / before, 1.0);
}

TEST(IterationCsv, HeaderAndRoundTrip) {
  std::vector<IterationRecord> log{{1, 0.1, std::nan(""), 0.5, 0, 0}, {2, 1.0 / 3.0, 0.30000000000000004, 0.25, 0, 0}};
  std::ostringstream os;
  write_iteration_csv(os, log);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iter,residual,contraction_ratio,horizon");
  std::getline(is, line);
  std::getline(is, line);
  EXPECT_EQ(line, "2,0.3333333333333333,0.30000000000000004,0.25");
}

namespace {

struct PicardSetup {
  Grid g{2, 32};
  std::shared_ptr<const BasisSet> basis = build_basis(g, 8);
  ScalarField rho0 = sample(g, [](const Point& x) { return 1.0 - 0.1 * std::sin(x[0]); });
  VectorField w0 = basis->mode_field(0), w5 = basis->mode_field(5);

  std::function<VectorField(double)> forcing(double amp) const {
    return [this, amp](double t) { return amp * (w0 + t * w5); };
  }
  PicardConfig config() const {
    PicardConfig c;
    c.horizon = 0.5;
    c.dt = 2e-3;
    c.tol = 1e-9;
    return c;
  }
};

CoeffPath ramp_path(std::size_t len, double dt, double scale) {
  CoeffPath s(len, Eigen::VectorXd::Zero(8));
  for (std::size_t n = 1; n < len; ++n)
    for (int j = 0; j < 8; ++j) s[n][j] = scale * static_cast<double>(n) * dt * std::cos(1.0 + j);
  return s;
}

}  // namespace

TEST(FrozenStress, EqualsDirectFormWhenFrozenAtSelf) {
  Grid g(2, 32);
  auto b = build_basis(g, 12);
  Eigen::VectorXd c(12);
  for (int i = 0; i < 12; ++i) c[i] = std::sin(1.7 * i + 0.3);
  const VectorField u = b->reconstruct(c);
  for (double p : {1.5, 2.0, 3.0}) {
    const PowerLawParams prm{0.3, p};
    const VectorField a = to_physical(frozen_stress_divergence(u, to_spectral(u), prm));
    EXPECT_LT(sup_norm(a - stress_divergence_direct(u, prm)), 1e-12);
  }
}

TEST(Picard, ZeroForcingConvergesInOneIteration) {
  PicardSetup S;
  PowerLawPicard sys(S.basis, ScalarField(S.g, 0.8), nullptr, {1.0, 2.0});
  PicardResult r = picard_G(S.config(), sys);
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].residual, 0.0);
  for (const auto& c : r.limit.coeffs) EXPECT_EQ(c.norm(), 0.0);
  for (const auto& rho : r.limit.rho) EXPECT_EQ(sup_norm(rho - ScalarField(S.g, 0.8)), 0.0);
}

TEST(Picard, SmallDataDecaysGeometricallyWithSmallResidual) {
  PicardSetup S;
  for (double p : {2.0, 2.5}) {
    PowerLawPicard sys(S.basis, S.rho0, S.forcing(0.5), {1.0, p});
    const PicardConfig cfg = S.config();
    PicardResult r = picard_G(cfg, sys);
    ASSERT_TRUE(r.converged) << p;
    EXPECT_EQ(r.halvings, 0);
    EXPECT_NEAR(r.smallness, 0.2, 1e-3);
    for (std::size_t k = 2; k < r.log.size(); ++k) EXPECT_LE(r.log[k].contraction_ratio, 0.8) << p << " " << k;
    EXPECT_LE(r.residual, 10.0 * cfg.tol);
  }
}

TEST(Picard, DistinctStartsShareTheLimit) {
  PicardSetup S;
  PowerLawPicard sys(S.basis, S.rho0, S.forcing(0.5), {1.0, 2.0});
  const PicardConfig cfg = S.config();
  PicardResult a = picard_G(cfg, sys);
  PicardResult b = picard_G(cfg, sys, ramp_path(a.limit.coeffs.size(), cfg.dt, 0.3));
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_GT(b.log[0].residual, a.log[0].residual * 1.1);
  EXPECT_LE(path_distance(a.limit.coeffs, b.limit.coeffs, cfg.dt), 2.0 * cfg.tol);
}

TEST(Picard, ResidualVanishesOnlyAtTheFixedPoint) {
  PicardSetup S;
  PowerLawPicard sys(S.basis, S.rho0, S.forcing(0.5), {1.0, 2.0});
  const PicardConfig cfg = S.config();
  PicardResult r = picard_G(cfg, sys);
  CoeffPath off = r.limit.coeffs;
  for (std::size_t n = 1; n < off.size(); ++n) off[n][3] += 1e-3 * std::sin(3.0 * n * cfg.dt);
  EXPECT_GT(sys.residual(off, cfg.dt), 1e3 * r.residual);
}

TEST(Picard, HorizonHalvesWhenTheBallIsTooSmall) {
  PicardSetup S;
  PowerLawPicard sys(S.basis, S.rho0, S.forcing(0.5), {1.0, 2.0});
  PicardConfig cfg = S.config();
  const double full = path_ball_norm(picard_G(cfg, sys).limit.coeffs, *S.basis, cfg.dt);
  cfg.ball_radius = 0.6 * full;
  PicardResult r = picard_G(cfg, sys);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.halvings, 1);
  EXPECT_LT(r.horizon, cfg.horizon);
  EXPECT_LE(path_ball_norm(r.limit.coeffs, *S.basis, cfg.dt), cfg.ball_radius);

  cfg.ball_radius = 1e-6;
  EXPECT_THROW(picard_G(cfg, sys), FixedPointAbort);
}

TEST(Picard, RejectsBadInput) {
  PicardSetup S;
  EXPECT_THROW(PowerLawPicard(S.basis, ScalarField(S.g, 0.0), nullptr, {1.0, 2.0}), std::invalid_argument);
  PowerLawPicard sys(S.basis, S.rho0, nullptr, {1.0, 2.0});
  PicardConfig cfg = S.config();
  CoeffPath bad(10, Eigen::VectorXd::Ones(8));
  EXPECT_THROW(picard_G(cfg, sys, bad), std::invalid_argument);
  cfg.tol = 0.0;
  EXPECT_THROW(picard_G(cfg, sys), std::invalid_argument);
}
