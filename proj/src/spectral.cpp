#include "rheoflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace rheoflow {

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

using GridKey = std::tuple<int, int, double>;

GridKey key_of(const Grid& g) { return {g.dim, g.n, g.length}; }

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const Plans& plans_for(const Grid& g) {
  static std::map<std::pair<int, int>, Plans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(g.dim, g.n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int dims[3] = {g.n, g.n, g.n};
  const std::size_t nreal = g.size();
  const std::size_t ncplx = spectrum_size(g);
  double* in = fftw_alloc_real(nreal);
  fftw_complex* out = fftw_alloc_complex(ncplx);
  Plans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c(g.dim, dims, in, out, flags);
  p.backward = fftw_plan_dft_c2r(g.dim, dims, out, in, flags);
  fftw_free(in);
  fftw_free(out);
  return cache.emplace(key, p).first->second;
}

inline int fold(int k, int n) { return ((k % n) + n) % n; }

}  // namespace

std::size_t spectrum_size(const Grid& g) {
  std::size_t s = static_cast<std::size_t>(g.n / 2 + 1);
  for (int a = 0; a < g.dim - 1; ++a) s *= static_cast<std::size_t>(g.n);
  return s;
}

Spectrum::Spectrum(const Grid& g) : grid(g), c(spectrum_size(g), cplx(0.0, 0.0)) {}

Spectrum& Spectrum::operator+=(const Spectrum& o) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
  return *this;
}
Spectrum& Spectrum::operator-=(const Spectrum& o) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
  return *this;
}
Spectrum& Spectrum::operator*=(double s) {
  for (auto& v : c) v *= s;
  return *this;
}
Spectrum& Spectrum::axpy(cplx s, const Spectrum& o) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += s * o.c[i];
  return *this;
}

const ModeTable& mode_table(const Grid& g) {
  static std::map<GridKey, std::unique_ptr<ModeTable>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto key = key_of(g);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  auto t = std::make_unique<ModeTable>();
  t->grid = g;
  const int n = g.n;
  const int half = n / 2;
  const int nl = half + 1;
  const double kscale = 2.0 * std::numbers::pi / g.length;
  t->count = spectrum_size(g);
  t->k.resize(t->count);
  t->kphys.resize(t->count);
  t->keff.resize(t->count);
  t->k2.resize(t->count);
  t->keff2.resize(t->count);
  t->weight.resize(t->count);
  t->passband.resize(t->count);
  const int third = n / 3;
  for (std::size_t idx = 0; idx < t->count; ++idx) {
    std::array<int, 3> k{0, 0, 0};
    std::size_t rem = idx;
    const int il = static_cast<int>(rem % nl);
    rem /= nl;
    k[g.dim - 1] = il;
    for (int a = g.dim - 2; a >= 0; --a) {
      const int i = static_cast<int>(rem % n);
      rem /= n;
      k[a] = (i < half) ? i : i - n;
    }
    t->k[idx] = k;
    double k2 = 0.0, ke2 = 0.0;
    bool pass = true;
    for (int a = 0; a < 3; ++a) {
      const double kp = (a < g.dim) ? kscale * k[a] : 0.0;
      const bool nyq = (a < g.dim) && (std::abs(k[a]) == half);
      t->kphys[idx][a] = kp;
      t->keff[idx][a] = nyq ? 0.0 : kp;
      k2 += kp * kp;
      ke2 += nyq ? 0.0 : kp * kp;
      if (a < g.dim && std::abs(k[a]) > third) pass = false;
    }
    t->k2[idx] = k2;
    t->keff2[idx] = ke2;
    t->weight[idx] = (il == 0 || il == half) ? 1.0 : 2.0;
    t->passband[idx] = pass ? 1 : 0;
  }
  return *cache.emplace(key, std::move(t)).first->second;
}

std::size_t locate_mode(const Grid& g, std::array<int, 3> k, bool& conjugate) {
  const int n = g.n;
  const int d = g.dim;
  int kl = fold(k[d - 1], n);
  conjugate = false;
  if (kl > n / 2) {
    conjugate = true;
    for (int a = 0; a < d; ++a) k[a] = -k[a];
    kl = fold(k[d - 1], n);
  }
  std::size_t idx = 0;
  for (int a = 0; a < d - 1; ++a) idx = idx * n + static_cast<std::size_t>(fold(k[a], n));
  return idx * static_cast<std::size_t>(n / 2 + 1) + static_cast<std::size_t>(kl);
}

cplx coefficient(const Spectrum& s, const std::array<int, 3>& k) {
  bool cj = false;
  const std::size_t idx = locate_mode(s.grid, k, cj);
  return cj ? std::conj(s.c[idx]) : s.c[idx];
}

void add_real_mode(Spectrum& s, const std::array<int, 3>& k, cplx value) {
  const Grid& g = s.grid;
  const int n = g.n;
  const int kl = fold(k[g.dim - 1], n);
  bool cj = false;
  const std::size_t idx = locate_mode(g, k, cj);
  if (kl == 0 || kl == n / 2) {
    std::array<int, 3> mk{-k[0], -k[1], -k[2]};
    bool cj2 = false;
    const std::size_t idx2 = locate_mode(g, mk, cj2);
    if (idx2 == idx) {
      s.c[idx] += 2.0 * value.real();
    } else {
      s.c[idx] += value;
      s.c[idx2] += std::conj(value);
    }
  } else {
    s.c[idx] += cj ? std::conj(value) : value;
  }
}

Spectrum to_spectral(const ScalarField& f) {
  const Grid& g = f.grid;
  if (f.values.size() != g.size()) throw std::invalid_argument("to_spectral: size mismatch");
  const Plans& p = plans_for(g);
  Spectrum s(g);
  std::vector<double> in(f.values);
  fftw_execute_dft_r2c(p.forward, in.data(), reinterpret_cast<fftw_complex*>(s.c.data()));
  s *= 1.0 / static_cast<double>(g.size());
  return s;
}

ScalarField to_physical(const Spectrum& s) {
  const Grid& g = s.grid;
  if (s.c.size() != spectrum_size(g)) throw std::invalid_argument("to_physical: size mismatch");
  const Plans& p = plans_for(g);
  std::vector<cplx> in(s.c);
  ScalarField f(g);
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(in.data()), f.values.data());
  return f;
}

void dealias(Spectrum& s) {
  const ModeTable& t = mode_table(s.grid);
  for (std::size_t i = 0; i < s.c.size(); ++i)
    if (!t.passband[i]) s.c[i] = 0.0;
}

ScalarField dealiased(const ScalarField& f) {
  Spectrum s = to_spectral(f);
  dealias(s);
  return to_physical(s);
}

double spectral_l2_squared(const Spectrum& s) {
  const ModeTable& t = mode_table(s.grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.c.size(); ++i) acc += t.weight[i] * std::norm(s.c[i]);
  return acc * s.grid.volume();
}

}  // namespace rheoflow
