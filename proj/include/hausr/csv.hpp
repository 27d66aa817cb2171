#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace hausr {

/// Shortest round-trippable decimal form ("%.17g" trimmed), so identical
/// runs write identical files.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void row(const std::vector<std::string>& cells);
  void raw(const std::string& cell);  // append one cell to the current row
  void end_row();

 private:
  std::ofstream out_;
  bool row_open_ = false;
};

}  // namespace hausr
