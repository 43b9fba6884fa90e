#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rheoflow/grid.hpp"

namespace rheoflow {

/// Named scalar arrays sharing one grid. Names are at most 15 bytes.
struct Checkpoint {
  Grid grid;
  std::vector<std::pair<std::string, ScalarField>> fields;

  const ScalarField& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// Binary layout: "NNF1", u32 dim, u32 n_points, u32 field count, then per
/// field a 16-byte NUL-padded name and n_points^dim little-endian float64
/// values in row-major order. The grid length is not stored; loads assume 2*pi.
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rheoflow
