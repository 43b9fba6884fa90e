#include "rheoflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rheoflow {

VectorSpectrum::VectorSpectrum(const Grid& g) : grid(g) {
  for (int a = 0; a < g.dim; ++a) comps.emplace_back(g);
}

VectorSpectrum to_spectral(const VectorField& v) {
  VectorSpectrum s;
  s.grid = v.grid;
  for (int a = 0; a < v.dim(); ++a) s.comps.push_back(to_spectral(v[a]));
  return s;
}

VectorField to_physical(const VectorSpectrum& s) {
  VectorField v;
  v.grid = s.grid;
  for (int a = 0; a < s.grid.dim; ++a) v.comps.push_back(to_physical(s[a]));
  return v;
}

Spectrum derivative(const Spectrum& s, int axis) {
  const ModeTable& t = mode_table(s.grid);
  Spectrum r(s.grid);
  for (std::size_t i = 0; i < s.size(); ++i) r[i] = cplx(0.0, t.keff[i][axis]) * s[i];
  return r;
}

Spectrum second_derivative(const Spectrum& s, int a, int b) {
  const ModeTable& t = mode_table(s.grid);
  Spectrum r(s.grid);
  if (a == b) {
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = -t.kphys[i][a] * t.kphys[i][a] * s[i];
  } else {
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = -t.keff[i][a] * t.keff[i][b] * s[i];
  }
  return r;
}

Spectrum laplacian(const Spectrum& s) {
  const ModeTable& t = mode_table(s.grid);
  Spectrum r(s.grid);
  for (std::size_t i = 0; i < s.size(); ++i) r[i] = -t.k2[i] * s[i];
  return r;
}

Spectrum divergence(const VectorSpectrum& v) {
  const ModeTable& t = mode_table(v.grid);
  Spectrum r(v.grid);
  for (int a = 0; a < v.grid.dim; ++a)
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += cplx(0.0, t.keff[i][a]) * v[a][i];
  return r;
}

void leray_project_inplace(VectorSpectrum& v) {
  const ModeTable& t = mode_table(v.grid);
  const int d = v.grid.dim;
  for (std::size_t i = 0; i < t.count; ++i) {
    if (t.keff2[i] == 0.0) continue;
    cplx kv = 0.0;
    for (int a = 0; a < d; ++a) kv += t.keff[i][a] * v[a][i];
    kv /= t.keff2[i];
    for (int a = 0; a < d; ++a) v[a][i] -= t.keff[i][a] * kv;
  }
}

Spectrum inverse_laplacian(const Spectrum& s) {
  const ModeTable& t = mode_table(s.grid);
  Spectrum r(s.grid);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (t.k2[i] != 0.0) r[i] = -s[i] / t.k2[i];
  return r;
}

VectorField gradient(const ScalarField& f) {
  Spectrum s = to_spectral(f);
  VectorField g;
  g.grid = f.grid;
  for (int a = 0; a < f.grid.dim; ++a) g.comps.push_back(to_physical(derivative(s, a)));
  return g;
}

ScalarField divergence(const VectorField& v) { return to_physical(divergence(to_spectral(v))); }

ScalarField laplacian(const ScalarField& f) { return to_physical(laplacian(to_spectral(f))); }

ScalarField bilaplacian(const ScalarField& f) {
  return to_physical(laplacian(laplacian(to_spectral(f))));
}

VectorField laplacian(const VectorField& v) {
  VectorField r;
  r.grid = v.grid;
  for (int a = 0; a < v.dim(); ++a) r.comps.push_back(laplacian(v[a]));
  return r;
}

std::vector<VectorField> velocity_gradient(const VectorField& v) {
  std::vector<VectorField> g;
  for (int i = 0; i < v.dim(); ++i) g.push_back(gradient(v[i]));
  return g;
}

VectorField directional_derivative(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "directional_derivative");
  VectorField r(a.grid);
  for (int i = 0; i < b.dim(); ++i) {
    VectorField gb = gradient(b[i]);
    ScalarField acc(a.grid);
    for (int j = 0; j < a.dim(); ++j)
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += a[j][p] * gb[j][p];
    r[i] = dealiased(acc);
  }
  return r;
}

VectorField leray_project(const VectorField& v) {
  VectorSpectrum s = to_spectral(v);
  leray_project_inplace(s);
  return to_physical(s);
}

ScalarField pressure_recover(const VectorField& rhs) {
  const ModeTable& t = mode_table(rhs.grid);
  VectorSpectrum s = to_spectral(rhs);
  Spectrum pi(rhs.grid);
  for (std::size_t i = 0; i < t.count; ++i) {
    if (t.keff2[i] == 0.0) continue;
    cplx kr = 0.0;
    for (int a = 0; a < rhs.dim(); ++a) kr += t.keff[i][a] * s[a][i];
    // Lap(pi) = div(rhs)  ->  -|k|^2 pi = i k.r
    pi[i] = cplx(0.0, -1.0) * kr / t.keff2[i];
  }
  return to_physical(pi);
}

namespace {

// x -> -div(w grad x), symmetric positive semidefinite in the grid inner product.
ScalarField weighted_operator(const ScalarField& x, const ScalarField& w) {
  Spectrum xs = to_spectral(x);
  VectorSpectrum flux(x.grid);
  for (int a = 0; a < x.grid.dim; ++a) {
    ScalarField da = to_physical(derivative(xs, a));
    for (std::size_t p = 0; p < da.size(); ++p) da[p] *= w[p];
    flux[a] = to_spectral(da);
  }
  Spectrum d = divergence(flux);
  d *= -1.0;
  return to_physical(d);
}

double grid_dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

WeightedProjectionResult weighted_project(const VectorField& g, const ScalarField& rho_bar, double tol,
                                          int max_iter, const ScalarField* phi_guess) {
  require_same_grid(g.grid, rho_bar.grid, "weighted_project");
  const Grid& grid = g.grid;
  ScalarField w(grid);
  double wsum = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    if (!(rho_bar[p] > 0.0)) throw std::domain_error("weighted_project: density must be positive");
    w[p] = 1.0 / rho_bar[p];
    wsum += w[p];
  }
  const double wmean = wsum / static_cast<double>(w.size());
  const ModeTable& t = mode_table(grid);

  // b = -div(w g)
  VectorSpectrum wg(grid);
  for (int a = 0; a < grid.dim; ++a) wg[a] = to_spectral(hadamard(w, g[a]));
  Spectrum bs = divergence(wg);
  bs *= -1.0;
  ScalarField b = to_physical(bs);

  auto precondition = [&](const ScalarField& r) {
    Spectrum rs = to_spectral(r);
    for (std::size_t i = 0; i < t.count; ++i) rs[i] = (t.keff2[i] == 0.0) ? 0.0 : rs[i] / (wmean * t.keff2[i]);
    return to_physical(rs);
  };

  WeightedProjectionResult out;
  ScalarField x = phi_guess ? *phi_guess : ScalarField(grid);
  ScalarField r = b;
  if (phi_guess) r -= weighted_operator(x, w);
  const double bnorm = std::sqrt(grid_dot(b, b));
  double rnorm = std::sqrt(grid_dot(r, r));
  int it = 0;
  if (bnorm > 0.0 && rnorm > tol * bnorm) {
    ScalarField z = precondition(r);
    ScalarField p = z;
    double rz = grid_dot(r, z);
    for (it = 1; it <= max_iter; ++it) {
      ScalarField ap = weighted_operator(p, w);
      const double pap = grid_dot(p, ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      x.axpy(alpha, p);
      r.axpy(-alpha, ap);
      rnorm = std::sqrt(grid_dot(r, r));
      if (rnorm <= tol * bnorm) break;
      z = precondition(r);
      const double rz_new = grid_dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t q = 0; q < p.size(); ++q) p[q] = z[q] + beta * p[q];
    }
  }
  out.iterations = it;
  out.residual = bnorm > 0.0 ? rnorm / bnorm : 0.0;

  Spectrum xs = to_spectral(x);
  VectorSpectrum acc(grid);
  for (int a = 0; a < grid.dim; ++a) {
    ScalarField da = to_physical(derivative(xs, a));
    ScalarField ga(grid);
    for (std::size_t p = 0; p < ga.size(); ++p) ga[p] = (g[a][p] - da[p]) * w[p];
    acc[a] = to_spectral(ga);
  }
  leray_project_inplace(acc);
  out.accel = to_physical(acc);
  out.phi = std::move(x);
  return out;
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / static_cast<double>(f.size());
}

double l2_inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "l2_inner");
  return grid_dot(a, b) * a.grid.cell_volume();
}

double l2_inner(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (int c = 0; c < a.dim(); ++c) s += l2_inner(a[c], b[c]);
  return s;
}

double lp_norm(const ScalarField& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  if (std::isinf(p)) return sup_norm(f);
  double s = 0.0;
  if (p == 2.0) {
    for (double v : f.values) s += v * v;
    return std::sqrt(s * f.grid.cell_volume());
  }
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

double lp_norm(const VectorField& v, double p) {
  ScalarField mag(v.grid);
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < v.dim(); ++a) s += v[a][i] * v[a][i];
    mag[i] = std::sqrt(s);
  }
  return lp_norm(mag, p);
}

double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

double sup_norm(const VectorField& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.grid.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < v.dim(); ++a) s += v[a][i] * v[a][i];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double min_value(const ScalarField& f) {
  return f.values.empty() ? 0.0 : *std::min_element(f.values.begin(), f.values.end());
}

double max_value(const ScalarField& f) {
  return f.values.empty() ? 0.0 : *std::max_element(f.values.begin(), f.values.end());
}

}  // namespace rheoflow
