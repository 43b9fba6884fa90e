#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace rheoflow {

/// Shortest decimal string that parses back to the same double (std::to_chars).
std::string format_shortest(double v);

/// Diagnostics table: one "# schema=..." comment line, a header row, then
/// one row per record with shortest round-trip formatting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema_line, std::vector<std::string> columns);
  void row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

}  // namespace rheoflow
