#include "hausr/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hausr {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  // Try increasing precision until the value round-trips exactly.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path + " for writing");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (const auto& c : cells) raw(c);
  end_row();
}

void CsvWriter::raw(const std::string& cell) {
  if (row_open_) out_ << ',';
  out_ << cell;
  row_open_ = true;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
}

}  // namespace hausr
