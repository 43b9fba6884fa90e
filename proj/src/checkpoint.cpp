#include "rheoflow/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rheoflow {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

const ScalarField& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, f] : fields)
    if (n == name) return f;
  throw std::out_of_range("checkpoint has no field named " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, f] : fields)
    if (n == name) return true;
  return false;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write("NNF1", 4);
  put_u32(os, static_cast<std::uint32_t>(cp.grid.dim));
  put_u32(os, static_cast<std::uint32_t>(cp.grid.n));
  put_u32(os, static_cast<std::uint32_t>(cp.fields.size()));
  for (const auto& [name, f] : cp.fields) {
    if (name.size() > 15) throw std::invalid_argument("checkpoint field name too long: " + name);
    if (f.grid != cp.grid) throw std::invalid_argument("checkpoint field on a different grid: " + name);
    char buf[16] = {};
    std::memcpy(buf, name.data(), name.size());
    os.write(buf, 16);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NNF1", 4) != 0) throw std::runtime_error("not an NNF1 checkpoint: " + path);
  Checkpoint cp;
  const auto dim = get_u32(is);
  const auto n = get_u32(is);
  const auto count = get_u32(is);
  cp.grid = Grid(static_cast<int>(dim), static_cast<int>(n));
  for (std::uint32_t i = 0; i < count; ++i) {
    char buf[17] = {};
    is.read(buf, 16);
    ScalarField f(cp.grid);
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    cp.fields.emplace_back(std::string(buf), std::move(f));
  }
  return cp;
}

}  // namespace rheoflow
