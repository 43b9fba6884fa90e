#include "rheoflow/random.hpp"

#include <cmath>
#include <numbers>

#include "rheoflow/operators.hpp"
#include "rheoflow/spectral.hpp"

namespace rheoflow {

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::draw(std::uint64_t seed, std::uint64_t counter) {
  return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

Spectrum random_spectrum(const Grid& g, CounterRng& rng, int kmax) {
  Spectrum s(g);
  const int d = g.dim;
  const int lim2 = d == 3 ? kmax : 0;
  // Enumerate the half space (first nonzero component positive) in a fixed order.
  for (int k0 = -kmax; k0 <= kmax; ++k0)
    for (int k1 = -kmax; k1 <= kmax; ++k1)
      for (int k2 = -lim2; k2 <= lim2; ++k2) {
        std::array<int, 3> k{k0, k1, k2};
        int first = 0;
        for (int a = 0; a < d; ++a)
          if (k[a] != 0) {
            first = k[a];
            break;
          }
        if (first <= 0) continue;
        double k2s = 0.0;
        for (int a = 0; a < d; ++a) k2s += double(k[a]) * k[a];
        const double amp = 1.0 / (1.0 + k2s);
        const double re = rng.normal() * amp;
        const double im = rng.normal() * amp;
        add_real_mode(s, k, cplx(re, im));
      }
  return s;
}

}  // namespace

ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int kmax, double sup) {
  CounterRng rng(seed);
  ScalarField f = to_physical(random_spectrum(g, rng, kmax));
  const double m = sup_norm(f);
  if (m > 0.0) f *= sup / m;
  return f;
}

VectorField random_solenoidal_field(const Grid& g, std::uint64_t seed, int kmax, double sup) {
  CounterRng rng(seed);
  VectorSpectrum vs(g);
  for (int a = 0; a < g.dim; ++a) vs[a] = random_spectrum(g, rng, kmax);
  leray_project_inplace(vs);
  VectorField v = to_physical(vs);
  const double m = sup_norm(v);
  if (m > 0.0) v *= sup / m;
  return v;
}

}  // namespace rheoflow
