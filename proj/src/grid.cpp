#include "rheoflow/grid.hpp"

#include <cmath>

namespace rheoflow {

Grid::Grid(int dim_, int n_, double length_) : dim(dim_), n(n_), length(length_) { validate(); }

void Grid::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3");
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("grid n_points must be even and >= 8");
  if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("grid length must be positive");
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

double Grid::volume() const { return std::pow(length, dim); }

double Grid::cell_volume() const { return std::pow(spacing(), dim); }

std::array<int, 3> Grid::unflatten(std::size_t idx) const {
  std::array<int, 3> ijk{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    ijk[a] = static_cast<int>(idx % n);
    idx /= n;
  }
  return ijk;
}

std::size_t Grid::flatten(const std::array<int, 3>& ijk) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim; ++a) idx = idx * n + static_cast<std::size_t>(ijk[a]);
  return idx;
}

Point Grid::position(std::size_t idx) const {
  auto ijk = unflatten(idx);
  const double h = spacing();
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = ijk[a] * h;
  return p;
}

std::size_t Grid::shifted(std::size_t idx, int axis, int shift) const {
  auto ijk = unflatten(idx);
  ijk[axis] = ((ijk[axis] + shift) % n + n) % n;
  return flatten(ijk);
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

ScalarField::ScalarField(const Grid& g, double fill) : grid(g), values(g.size(), fill) {}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid, o.grid, "ScalarField +=");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid, o.grid, "ScalarField -=");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& o) {
  require_same_grid(grid, o.grid, "ScalarField axpy");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * o.values[i];
  return *this;
}

bool ScalarField::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "hadamard");
  ScalarField r(a.grid);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

VectorField::VectorField(const Grid& g, double fill) : grid(g) {
  comps.reserve(g.dim);
  for (int a = 0; a < g.dim; ++a) comps.emplace_back(g, fill);
}

VectorField& VectorField::operator+=(const VectorField& o) {
  for (int a = 0; a < dim(); ++a) comps[a] += o.comps[a];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  for (int a = 0; a < dim(); ++a) comps[a] -= o.comps[a];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (auto& c : comps) c *= s;
  return *this;
}

VectorField& VectorField::axpy(double s, const VectorField& o) {
  for (int a = 0; a < dim(); ++a) comps[a].axpy(s, o.comps[a]);
  return *this;
}

bool VectorField::all_finite() const {
  for (const auto& c : comps)
    if (!c.all_finite()) return false;
  return true;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

VectorField scale(const ScalarField& s, const VectorField& v) {
  VectorField r(v.grid);
  for (int a = 0; a < v.dim(); ++a) r[a] = hadamard(s, v[a]);
  return r;
}

ScalarField dot(const VectorField& a, const VectorField& b) {
  ScalarField r(a.grid);
  for (int c = 0; c < a.dim(); ++c)
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a[c][i] * b[c][i];
  return r;
}

SymTensorField::SymTensorField(const Grid& g, double fill) : grid(g) {
  for (int k = 0; k < sym_count(g.dim); ++k) comps.emplace_back(g, fill);
}

ScalarField double_dot(const SymTensorField& a, const SymTensorField& b) {
  ScalarField r(a.grid);
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double w = (i == j) ? 1.0 : 2.0;
      const auto& A = a.at(i, j);
      const auto& B = b.at(i, j);
      for (std::size_t p = 0; p < r.size(); ++p) r[p] += w * A[p] * B[p];
    }
  return r;
}

ScalarField sample(const Grid& g, const std::function<double(const Point&)>& fn) {
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(g.position(i));
  return f;
}

VectorField sample_vector(const Grid& g, const std::function<Point(const Point&)>& fn) {
  VectorField v(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point val = fn(g.position(i));
    for (int a = 0; a < g.dim; ++a) v[a][i] = val[a];
  }
  return v;
}

}  // namespace rheoflow
