#include "rheoflow/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "rheoflow/operators.hpp"

namespace rheoflow {

namespace {

inline double h00(double s) { return (2.0 * s - 3.0) * s * s + 1.0; }
inline double h01(double s) { return (3.0 - 2.0 * s) * s * s; }
inline double h10(double s) { return ((s - 2.0) * s + 1.0) * s; }
inline double h11(double s) { return (s - 1.0) * s * s; }

}  // namespace

Point wrap(const Grid& g, Point x) {
  for (int a = 0; a < g.dim; ++a) {
    x[a] = std::fmod(x[a], g.length);
    if (x[a] < 0.0) x[a] += g.length;
    if (x[a] >= g.length) x[a] -= g.length;
  }
  return x;
}

Interpolant::Interpolant(const ScalarField& f, InterpMethod method) : grid_(f.grid), method_(method) {
  spec_ = to_spectral(f);
  if (method_ == InterpMethod::Spectral) return;
  const int d = grid_.dim;
  const double h = grid_.spacing();
  tables_.resize(std::size_t{1} << d);
  tables_[0] = f.values;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    Spectrum s = spec_;
    double scale = 1.0;
    for (int a = 0; a < d; ++a)
      if (mask & (1u << a)) {
        s = derivative(s, a);
        scale *= h;
      }
    ScalarField dv = to_physical(s);
    dv *= scale;
    tables_[mask] = std::move(dv.values);
  }
}

Interpolant::Cell Interpolant::locate(const Point& x) const {
  const int d = grid_.dim;
  const int n = grid_.n;
  const double inv_h = n / grid_.length;
  std::array<int, 3> i0{0, 0, 0};
  Cell c;
  for (int a = 0; a < d; ++a) {
    const double q = x[a] * inv_h;
    const double fl = std::floor(q);
    c.s[a] = q - fl;
    // Cells are indexed modulo n, so the point itself never needs wrapping.
    long long i = static_cast<long long>(fl) % n;
    if (i < 0) i += n;
    i0[a] = static_cast<int>(i);
  }
  if (d == 2) {
    const std::size_t r0 = static_cast<std::size_t>(i0[0]) * n, r1 = static_cast<std::size_t>((i0[0] + 1) % n) * n;
    const std::size_t c0 = static_cast<std::size_t>(i0[1]), c1 = static_cast<std::size_t>((i0[1] + 1) % n);
    c.corner = {r0 + c0, r1 + c0, r0 + c1, r1 + c1};
    return c;
  }
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    std::array<int, 3> ijk{0, 0, 0};
    for (int a = 0; a < d; ++a) ijk[a] = (i0[a] + static_cast<int>((corner >> a) & 1u)) % n;
    c.corner[corner] = grid_.flatten(ijk);
  }
  return c;
}

double Interpolant::hermite(const Cell& c) const {
  const int d = grid_.dim;
  // Per-axis basis weights: [corner bit][value=0 / derivative=1]
  double wv[3][2][2];
  for (int a = 0; a < d; ++a) {
    const double s = c.s[a];
    wv[a][0][0] = h00(s);
    wv[a][1][0] = h01(s);
    wv[a][0][1] = h10(s);
    wv[a][1][1] = h11(s);
  }
  if (d == 2) {
    const double* t0 = tables_[0].data();
    const double* t1 = tables_[1].data();
    const double* t2 = tables_[2].data();
    const double* t3 = tables_[3].data();
    double acc = 0.0;
    for (unsigned corner = 0; corner < 4; ++corner) {
      const std::size_t idx = c.corner[corner];
      const double* w0 = wv[0][corner & 1u];
      const double* w1 = wv[1][(corner >> 1) & 1u];
      acc += w0[0] * (w1[0] * t0[idx] + w1[1] * t2[idx]) + w0[1] * (w1[0] * t1[idx] + w1[1] * t3[idx]);
    }
    return acc;
  }
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    const std::size_t idx = c.corner[corner];
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      double w = 1.0;
      for (int a = 0; a < d; ++a) w *= wv[a][(corner >> a) & 1u][(mask >> a) & 1u];
      acc += w * tables_[mask][idx];
    }
  }
  return acc;
}

double Interpolant::spectral(const Point& xin) const {
  const ModeTable& t = mode_table(grid_);
  double acc = 0.0;
  for (std::size_t i = 0; i < t.count; ++i) {
    double phase = 0.0;
    for (int a = 0; a < grid_.dim; ++a) phase += t.kphys[i][a] * xin[a];
    const cplx e(std::cos(phase), std::sin(phase));
    // Nyquist-plane coefficients are real-symmetrized by using the real part.
    acc += t.weight[i] * (spec_[i] * e).real();
  }
  return acc;
}

double Interpolant::operator()(const Point& x) const {
  if (method_ == InterpMethod::Spectral) return spectral(x);
  return hermite(locate(x));
}

double Interpolant::clamped(const Point& x) const {
  if (method_ == InterpMethod::Spectral) return spectral(x);
  const Cell c = locate(x);
  const double v = hermite(c);
  double lo = tables_[0][c.corner[0]], hi = lo;
  for (unsigned corner = 1; corner < (1u << grid_.dim); ++corner) {
    lo = std::min(lo, tables_[0][c.corner[corner]]);
    hi = std::max(hi, tables_[0][c.corner[corner]]);
  }
  return std::clamp(v, lo, hi);
}

VectorInterpolant::VectorInterpolant(const VectorField& v, InterpMethod method) : grid_(v.grid) {
  for (int a = 0; a < v.dim(); ++a) comps_.emplace_back(v[a], method);
  sup_ = rheoflow::sup_norm(v);
}

Point VectorInterpolant::operator()(const Point& x) const {
  Point r{0.0, 0.0, 0.0};
  if (comps_.empty()) return r;
  if (comps_[0].method() == InterpMethod::Spectral) {
    for (std::size_t a = 0; a < comps_.size(); ++a) r[a] = comps_[a](x);
    return r;
  }
  const Interpolant::Cell c = comps_[0].locate(x);
  for (std::size_t a = 0; a < comps_.size(); ++a) r[a] = comps_[a].hermite(c);
  return r;
}

std::vector<double> interpolate(const ScalarField& f, const std::vector<Point>& points, InterpMethod method) {
  Interpolant ip(f, method);
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(ip(p));
  return out;
}

}  // namespace rheoflow
