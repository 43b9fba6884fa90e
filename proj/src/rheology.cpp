#include "rheoflow/rheology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rheoflow/log.hpp"
#include "rheoflow/random.hpp"

namespace rheoflow {

void PowerLawParams::validate() const {
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) throw std::invalid_argument("mu0 must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("power-law index p must exceed 1");
}

void PowerLawParams::warn_thresholds(int n) const {
  if (!weak_existence_ok(n))
    warn("p = " + std::to_string(p) + " is below the weak-existence threshold 1 + 2n/(n+1) for n = " +
         std::to_string(n));
  if (!convective_ok()) warn("p = " + std::to_string(p) + " is below 11/5; convective estimates are not covered");
}

double effective_viscosity(double s, const PowerLawParams& params) {
  if (s < 0.0) throw std::domain_error("effective_viscosity: s must be nonnegative");
  if (params.p == 2.0) return params.mu0;
  return params.mu0 * std::pow(1.0 + s, 0.5 * (params.p - 2.0));
}

double effective_viscosity_derivative(double s, const PowerLawParams& params) {
  if (s < 0.0) throw std::domain_error("effective_viscosity_derivative: s must be nonnegative");
  if (params.p == 2.0) return 0.0;
  const double e = 0.5 * (params.p - 2.0);
  return params.mu0 * e * std::pow(1.0 + s, e - 1.0);
}

double frobenius_squared(const SmallMat& m) { return ddot(m, m); }

double ddot(const SmallMat& x, const SmallMat& y) {
  double s = 0.0;
  for (int i = 0; i < x.dim; ++i)
    for (int j = 0; j < x.dim; ++j) s += x.a[i][j] * y.a[i][j];
  return s;
}

SmallMat operator-(const SmallMat& x, const SmallMat& y) {
  SmallMat r;
  r.dim = x.dim;
  for (int i = 0; i < x.dim; ++i)
    for (int j = 0; j < x.dim; ++j) r.a[i][j] = x.a[i][j] - y.a[i][j];
  return r;
}

SmallMat operator*(double s, const SmallMat& x) {
  SmallMat r = x;
  for (int i = 0; i < x.dim; ++i)
    for (int j = 0; j < x.dim; ++j) r.a[i][j] *= s;
  return r;
}

SmallMat power_law_stress(const SmallMat& A, const PowerLawParams& params) {
  return effective_viscosity(frobenius_squared(A), params) * A;
}

StressLaw power_law(const PowerLawParams& params) {
  return [params](const SmallMat& A) { return power_law_stress(A, params); };
}

namespace {

// All first derivatives of u in spectral space: g[i][j] = d_j u_i.
std::vector<std::vector<Spectrum>> spectral_gradient(const VectorSpectrum& u) {
  const int d = u.grid.dim;
  std::vector<std::vector<Spectrum>> g(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g[i].push_back(derivative(u[i], j));
  return g;
}

SymTensorField deformation_from_spectrum(const VectorSpectrum& u) {
  const int d = u.grid.dim;
  auto g = spectral_gradient(u);
  SymTensorField D(u.grid);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      Spectrum s = g[i][j];
      if (i != j) {
        s += g[j][i];
        s *= 0.5;
      }
      D.at(i, j) = to_physical(s);
    }
  return D;
}

}  // namespace

SymTensorField deformation_tensor(const VectorField& u) { return deformation_from_spectrum(to_spectral(u)); }

ScalarField frobenius_squared(const SymTensorField& D) { return double_dot(D, D); }

SymTensorField stress_tensor(const SymTensorField& D, const PowerLawParams& params) {
  ScalarField s = frobenius_squared(D);
  SymTensorField T(D.grid);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double nu = effective_viscosity(s[p], params);
    for (std::size_t c = 0; c < D.comps.size(); ++c) T.comps[c][p] = nu * D.comps[c][p];
  }
  return T;
}

VectorSpectrum stress_divergence_direct(const VectorSpectrum& u_hat, const PowerLawParams& params) {
  const int d = u_hat.grid.dim;
  SymTensorField T = stress_tensor(deformation_from_spectrum(u_hat), params);
  std::vector<Spectrum> Ts;
  for (auto& c : T.comps) {
    Spectrum s = to_spectral(c);
    dealias(s);
    Ts.push_back(std::move(s));
  }
  VectorSpectrum f(u_hat.grid);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) f[i] += derivative(Ts[sym_index(i, j, d)], j);
    f[i] *= 2.0;
  }
  return f;
}

VectorSpectrum frozen_stress_divergence(const VectorField& v, const VectorSpectrum& u_hat,
                                        const PowerLawParams& params) {
  require_same_grid(v.grid, u_hat.grid, "frozen_stress_divergence");
  const int d = v.grid.dim;
  const ScalarField s = frobenius_squared(deformation_tensor(v));
  SymTensorField D = deformation_from_spectrum(u_hat);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double nu = effective_viscosity(s[p], params);
    for (auto& c : D.comps) c[p] *= nu;
  }
  std::vector<Spectrum> Ts;
  for (auto& c : D.comps) {
    Spectrum t = to_spectral(c);
    dealias(t);
    Ts.push_back(std::move(t));
  }
  VectorSpectrum f(v.grid);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) f[i] += derivative(Ts[sym_index(i, j, d)], j);
    f[i] *= 2.0;
  }
  return f;
}

VectorField stress_divergence_direct(const VectorField& u, const PowerLawParams& params) {
  return to_physical(stress_divergence_direct(to_spectral(u), params));
}

VectorField stress_divergence_coeff(const VectorField& u, const PowerLawParams& params) {
  const Grid& g = u.grid;
  const int d = g.dim;
  VectorSpectrum us = to_spectral(u);
  SymTensorField D = deformation_from_spectrum(us);
  ScalarField s = frobenius_squared(D);
  // Second derivatives d_k d_l u_j for k <= l.
  std::vector<std::vector<ScalarField>> hess(d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l) hess[j].push_back(to_physical(second_derivative(us[j], k, l)));
  std::vector<ScalarField> lap;
  for (int i = 0; i < d; ++i) lap.push_back(to_physical(laplacian(us[i])));

  VectorField f(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double nu = effective_viscosity(s[p], params);
    const double dnu = effective_viscosity_derivative(s[p], params);
    for (int i = 0; i < d; ++i) {
      double acc = nu * lap[i][p];
      if (dnu != 0.0) {
        double t = 0.0;
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
              const double dik = D.at(i, k, p);
              const double djl = D.at(j, l, p);
              t += dik * djl * hess[j][sym_index(k, l, d)][p];
            }
        acc += 4.0 * dnu * t;
      }
      f[i][p] = acc;
    }
  }
  for (int i = 0; i < d; ++i) f[i] = dealiased(f[i]);
  return f;
}

double dissipation(const VectorField& u, const PowerLawParams& params) {
  SymTensorField D = deformation_tensor(u);
  return integrate(double_dot(stress_tensor(D, params), D));
}

double korn_norm(const VectorField& u, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("korn_norm requires p >= 1");
  ScalarField s = frobenius_squared(deformation_tensor(u));
  for (double& v : s.values) v = std::sqrt(v);
  return lp_norm(s, p);
}

double monotonicity_gap(const SymTensorField& D1, const SymTensorField& D2, const PowerLawParams& params) {
  require_same_grid(D1.grid, D2.grid, "monotonicity_gap");
  SymTensorField T1 = stress_tensor(D1, params);
  SymTensorField T2 = stress_tensor(D2, params);
  SymTensorField dT(D1.grid), dD(D1.grid);
  for (std::size_t c = 0; c < dT.comps.size(); ++c) {
    dT.comps[c] = T1.comps[c] - T2.comps[c];
    dD.comps[c] = D1.comps[c] - D2.comps[c];
  }
  return min_value(double_dot(dT, dD));
}

namespace {

SmallMat random_sym(CounterRng& rng, int dim) {
  // Log-uniform magnitude over six decades so both the Newtonian-like and
  // the power-law regimes of nu are sampled.
  const double mag = std::pow(10.0, rng.uniform(-3.0, 3.0));
  SmallMat m;
  m.dim = dim;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      const double v = rng.normal() * mag;
      m.a[i][j] = v;
      m.a[j][i] = v;
    }
  return m;
}

SmallMat random_rotation(CounterRng& rng, int dim) {
  SmallMat q;
  q.dim = dim;
  if (dim == 2) {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    q.a[0][0] = std::cos(th);
    q.a[0][1] = -std::sin(th);
    q.a[1][0] = std::sin(th);
    q.a[1][1] = std::cos(th);
    return q;
  }
  double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
  const double nrm = std::sqrt(w * w + x * x + y * y + z * z);
  w /= nrm; x /= nrm; y /= nrm; z /= nrm;
  q.a[0][0] = 1 - 2 * (y * y + z * z); q.a[0][1] = 2 * (x * y - z * w); q.a[0][2] = 2 * (x * z + y * w);
  q.a[1][0] = 2 * (x * y + z * w); q.a[1][1] = 1 - 2 * (x * x + z * z); q.a[1][2] = 2 * (y * z - x * w);
  q.a[2][0] = 2 * (x * z - y * w); q.a[2][1] = 2 * (y * z + x * w); q.a[2][2] = 1 - 2 * (x * x + y * y);
  return q;
}

SmallMat conjugate(const SmallMat& q, const SmallMat& a) {
  SmallMat r;
  r.dim = a.dim;
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.dim; ++k)
        for (int l = 0; l < a.dim; ++l) s += q.a[i][k] * a.a[k][l] * q.a[j][l];
      r.a[i][j] = s;
    }
  return r;
}

}  // namespace

StructureReport check_structure_conditions(const PowerLawParams& params, int dim, int samples, std::uint64_t seed,
                                           const StressLaw& law_in) {
  params.validate();
  const StressLaw law = law_in ? law_in : power_law(params);
  CounterRng rng(seed);
  StructureReport rep;
  rep.samples = samples;
  rep.min_relative_gap = std::numeric_limits<double>::infinity();
  const double mu0 = params.mu0;
  const double p = params.p;
  const double e = 0.5 * (p - 2.0);
  // Growth constants for p >= 2: (1+s)^e <= 2^e max(1, s^e) gives
  // |T(A)| <= g + c |A|^(p-1) with g = mu0 2^e and c = 2 mu0 2^e.
  const double g_const = mu0 * std::pow(2.0, std::max(e, 0.0));
  const double c_const = 2.0 * g_const;
  for (int n = 0; n < samples; ++n) {
    const SmallMat A = random_sym(rng, dim);
    const SmallMat B = random_sym(rng, dim);
    const SmallMat TA = law(A);
    const SmallMat TB = law(B);
    const SmallMat dA = A - B;
    const double gap = ddot(TA - TB, dA);
    const double dn2 = frobenius_squared(dA);
    if (dn2 > 0.0) {
      if (!(gap > 0.0)) ++rep.monotonicity_failures;
      rep.min_relative_gap = std::min(rep.min_relative_gap, gap / dn2);
    }

    const double a2 = frobenius_squared(A);
    const double an = std::sqrt(a2);
    const double coerc = ddot(TA, A);
    const double coerc_bound = mu0 * std::min(1.0, std::pow(1.0 + a2, e)) * a2;
    if (a2 > 0.0 && !(coerc > 0.0 && coerc >= coerc_bound * (1.0 - 1e-12))) ++rep.coercivity_failures;

    const double tn = std::sqrt(frobenius_squared(TA));
    const double slack = 1.0 + 1e-12;
    bool growth_ok = tn <= mu0 * std::pow(1.0 + a2, e) * an * slack;
    if (p >= 2.0)
      growth_ok = growth_ok && tn <= (g_const + c_const * std::pow(an, p - 1.0)) * slack;
    else
      growth_ok = growth_ok && tn <= mu0 * std::min(an, std::pow(an, p - 1.0)) * slack;
    if (!growth_ok) ++rep.growth_failures;

    const SmallMat Q = random_rotation(rng, dim);
    const SmallMat lhs = law(conjugate(Q, A));
    const SmallMat rhs = conjugate(Q, TA);
    const double diff = std::sqrt(frobenius_squared(lhs - rhs));
    if (diff > 1e-12 * std::max(1.0, tn)) ++rep.frame_failures;
  }
  return rep;
}

}  // namespace rheoflow
