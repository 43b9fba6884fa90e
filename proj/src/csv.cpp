#include "rheoflow/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace rheoflow {

std::string format_shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema_line, std::vector<std::string> columns)
    : out_(path), columns_(std::move(columns)) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  out_ << schema_line << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw std::logic_error("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_shortest(values[i]);
  out_ << '\n';
  out_.flush();
}

}  // namespace rheoflow
