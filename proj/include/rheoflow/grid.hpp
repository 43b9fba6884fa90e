#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rheoflow {

/// Point on the torus; unused trailing coordinates are zero in 2D.
using Point = std::array<double, 3>;

/// Uniform periodic grid on the torus [0, length)^dim.
struct Grid {
  int dim = 2;
  int n = 64;
  double length = 2.0 * std::numbers::pi;

  Grid() = default;
  Grid(int dim_, int n_, double length_ = 2.0 * std::numbers::pi);

  void validate() const;
  std::size_t size() const;
  double spacing() const { return length / n; }
  double volume() const;
  double cell_volume() const;
  /// Coordinates of the node with flat row-major index idx.
  Point position(std::size_t idx) const;
  /// Integer node indices (axis 0 slowest) of a flat index.
  std::array<int, 3> unflatten(std::size_t idx) const;
  std::size_t flatten(const std::array<int, 3>& ijk) const;
  /// Flat index of the node shifted by `shift` cells along `axis` (periodic).
  std::size_t shifted(std::size_t idx, int axis, int shift) const;

  bool operator==(const Grid& o) const { return dim == o.dim && n == o.n && length == o.length; }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

class ScalarField {
 public:
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0);
  ScalarField(const Grid& g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  /// this += s * o
  ScalarField& axpy(double s, const ScalarField& o);

  bool all_finite() const;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
/// Pointwise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);

class VectorField {
 public:
  Grid grid;
  std::vector<ScalarField> comps;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0);

  int dim() const { return grid.dim; }
  ScalarField& operator[](int a) { return comps[a]; }
  const ScalarField& operator[](int a) const { return comps[a]; }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
  VectorField& axpy(double s, const VectorField& o);

  bool all_finite() const;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);
/// Pointwise scalar times vector.
VectorField scale(const ScalarField& s, const VectorField& v);
/// Pointwise dot product.
ScalarField dot(const VectorField& a, const VectorField& b);

/// Upper-triangle storage index of entry (i, j) of a symmetric dim x dim matrix.
inline int sym_index(int i, int j, int dim) {
  if (i > j) std::swap(i, j);
  return dim == 2 ? (i == 0 ? j : 2) : (i == 0 ? j : (i == 1 ? 2 + j : 5));
}
inline int sym_count(int dim) { return dim * (dim + 1) / 2; }

class SymTensorField {
 public:
  Grid grid;
  std::vector<ScalarField> comps;

  SymTensorField() = default;
  explicit SymTensorField(const Grid& g, double fill = 0.0);

  int dim() const { return grid.dim; }
  ScalarField& at(int i, int j) { return comps[sym_index(i, j, grid.dim)]; }
  const ScalarField& at(int i, int j) const { return comps[sym_index(i, j, grid.dim)]; }
  double at(int i, int j, std::size_t idx) const { return comps[sym_index(i, j, grid.dim)][idx]; }
};

/// Pointwise Frobenius inner product A:B.
ScalarField double_dot(const SymTensorField& a, const SymTensorField& b);

ScalarField sample(const Grid& g, const std::function<double(const Point&)>& fn);
VectorField sample_vector(const Grid& g, const std::function<Point(const Point&)>& fn);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace rheoflow
