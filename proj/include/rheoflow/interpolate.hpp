#pragma once

#include <vector>

#include "rheoflow/grid.hpp"
#include "rheoflow/spectral.hpp"

namespace rheoflow {

enum class InterpMethod {
  /// Tensor-product cubic Hermite with spectrally computed nodal derivatives.
  Cubic,
  /// Exact trigonometric interpolation (direct sum over all modes; slow).
  Spectral,
};

/// Reusable interpolant of one scalar field. Building it costs a handful of
/// FFTs; evaluation is local for the cubic method.
class Interpolant {
 public:
  Interpolant() = default;
  Interpolant(const ScalarField& f, InterpMethod method = InterpMethod::Cubic);

  double operator()(const Point& x) const;
  /// Cubic value clamped to the range of the enclosing cell's corner values.
  double clamped(const Point& x) const;

  const Grid& grid() const { return grid_; }
  InterpMethod method() const { return method_; }

 private:
  friend class VectorInterpolant;
  struct Cell {
    std::array<std::size_t, 8> corner{};
    std::array<double, 3> s{};
  };
  Cell locate(const Point& x) const;
  double hermite(const Cell& c) const;
  double spectral(const Point& x) const;

  Grid grid_;
  InterpMethod method_ = InterpMethod::Cubic;
  /// tables_[mask] holds h^|mask| * (mixed derivative over axes in mask).
  std::vector<std::vector<double>> tables_;
  Spectrum spec_;
};

/// Interpolants for every component of a vector field.
class VectorInterpolant {
 public:
  VectorInterpolant() = default;
  VectorInterpolant(const VectorField& v, InterpMethod method = InterpMethod::Cubic);
  Point operator()(const Point& x) const;
  const Grid& grid() const { return grid_; }
  double sup_norm() const { return sup_; }

 private:
  Grid grid_;
  std::vector<Interpolant> comps_;
  double sup_ = 0.0;
};

/// Wraps a position into [0, length) along each active axis.
Point wrap(const Grid& g, Point x);

std::vector<double> interpolate(const ScalarField& f, const std::vector<Point>& points,
                                InterpMethod method = InterpMethod::Cubic);

}  // namespace rheoflow
