#pragma once

#include <string>
#include <vector>

#include "hausr/eval.hpp"

namespace hausr {

/// Standalone SVG bar chart of success rate per goal, trained goals
/// highlighted.
std::string success_bar_chart(const std::vector<EvalRow>& rows);

/// Standalone SVG line chart of a transfer curve (success rate and mean
/// steps against update count).
std::string transfer_line_chart(const std::vector<TransferPoint>& curve);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace hausr
