#pragma once

#include <array>
#include <complex>
#include <vector>

#include "rheoflow/grid.hpp"

namespace rheoflow {

using cplx = std::complex<double>;

/// Half-complex Fourier coefficients of a real field, normalized so that
/// f(x) = sum_k c_k exp(i k.x). The last axis stores only k >= 0.
struct Spectrum {
  Grid grid;
  std::vector<cplx> c;

  Spectrum() = default;
  explicit Spectrum(const Grid& g);

  std::size_t size() const { return c.size(); }
  cplx& operator[](std::size_t i) { return c[i]; }
  cplx operator[](std::size_t i) const { return c[i]; }

  Spectrum& operator+=(const Spectrum& o);
  Spectrum& operator-=(const Spectrum& o);
  Spectrum& operator*=(double s);
  Spectrum& axpy(cplx s, const Spectrum& o);
};

/// Number of stored coefficients for a grid (n^(dim-1) * (n/2+1)).
std::size_t spectrum_size(const Grid& g);

/// Integer wavevector layout of the half-complex array, cached per grid.
struct ModeTable {
  Grid grid;
  std::size_t count = 0;
  /// Signed integer wavenumbers per axis for each stored coefficient.
  std::vector<std::array<int, 3>> k;
  /// Physical wavenumbers (2 pi / L) * k per axis.
  std::vector<std::array<double, 3>> kphys;
  /// Physical wavenumbers with Nyquist components zeroed; used for odd derivatives.
  std::vector<std::array<double, 3>> keff;
  std::vector<double> k2;     // |k|^2 (physical, Nyquist included)
  std::vector<double> keff2;  // |keff|^2
  /// Multiplicity of the stored coefficient in the full spectrum (1 or 2).
  std::vector<double> weight;
  /// True if every |k_a| <= n/3 (2/3-rule pass band).
  std::vector<unsigned char> passband;
};

const ModeTable& mode_table(const Grid& g);

/// Flat index of integer wavevector k in the half-complex array together
/// with a flag telling whether the stored value is conj of the requested one.
/// Wavenumbers are taken modulo n.
std::size_t locate_mode(const Grid& g, std::array<int, 3> k, bool& conjugate);
/// Coefficient c_k for any integer wavevector (aliases folded modulo n).
cplx coefficient(const Spectrum& s, const std::array<int, 3>& k);
/// Adds value*exp(i k.x) + conj(value)*exp(-i k.x) to the spectrum.
void add_real_mode(Spectrum& s, const std::array<int, 3>& k, cplx value);

Spectrum to_spectral(const ScalarField& f);
ScalarField to_physical(const Spectrum& s);

/// Zeroes coefficients outside the 2/3-rule pass band.
void dealias(Spectrum& s);
/// Projects a physical field onto the 2/3-rule pass band.
ScalarField dealiased(const ScalarField& f);

/// Parseval: squared L2 norm over the torus computed from coefficients.
double spectral_l2_squared(const Spectrum& s);

}  // namespace rheoflow
