#include "hausr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hausr {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string success_bar_chart(const std::vector<EvalRow>& rows) {
  const double bar_w = 14, gap = 4, chart_h = 220, margin = 40;
  const double width = margin * 2 + rows.size() * (bar_w + gap);
  const double height = chart_h + 2 * margin;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = margin + chart_h * (1.0 - tick / 4.0);
    svg << "<line x1=\"" << num(margin - 4) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(width - margin) << "\" y2=\"" << num(y)
        << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"4\" y=\"" << num(y + 4) << "\" font-size=\"10\">"
        << num(tick / 4.0) << "</text>\n";
  }
  double x = margin;
  for (const EvalRow& r : rows) {
    const double h = chart_h * std::clamp(r.success_rate, 0.0, 1.0);
    svg << "<rect x=\"" << num(x) << "\" y=\"" << num(margin + chart_h - h)
        << "\" width=\"" << num(bar_w) << "\" height=\"" << num(h) << "\" fill=\""
        << (r.trained ? "#c0392b" : "#2c3e50") << "\"/>\n"
        << "<text x=\"" << num(x + bar_w / 2) << "\" y=\""
        << num(margin + chart_h + 12)
        << "\" font-size=\"8\" text-anchor=\"middle\">" << r.goal_id
        << "</text>\n";
    x += bar_w + gap;
  }
  svg << "<text x=\"" << num(margin) << "\" y=\"" << num(margin - 16)
      << "\" font-size=\"12\">success rate per goal (highlighted = trained)"
      << "</text>\n</svg>\n";
  return svg.str();
}

std::string transfer_line_chart(const std::vector<TransferPoint>& curve) {
  const double chart_w = 420, chart_h = 220, margin = 50;
  const double width = chart_w + 2 * margin, height = chart_h + 2 * margin;
  double max_updates = 1, max_steps = 1;
  for (const auto& p : curve) {
    max_updates = std::max(max_updates, static_cast<double>(p.updates));
    if (std::isfinite(p.mean_steps)) max_steps = std::max(max_steps, p.mean_steps);
  }

  auto px = [&](double updates) {
    return margin + chart_w * updates / max_updates;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << num(margin) << "\" y1=\"" << num(margin + chart_h)
      << "\" x2=\"" << num(margin + chart_w) << "\" y2=\""
      << num(margin + chart_h) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << num(margin) << "\" y1=\"" << num(margin) << "\" x2=\""
      << num(margin) << "\" y2=\"" << num(margin + chart_h)
      << "\" stroke=\"black\"/>\n";

  auto polyline = [&](const std::string& color, auto value, double scale) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve) {
      const double v = value(p);
      if (!std::isfinite(v)) continue;
      svg << num(px(static_cast<double>(p.updates))) << ","
          << num(margin + chart_h * (1.0 - std::clamp(v / scale, 0.0, 1.0))) << " ";
    }
    svg << "\"/>\n";
  };
  polyline("#27ae60", [](const TransferPoint& p) { return p.success_rate; }, 1.0);
  polyline("#8e44ad", [](const TransferPoint& p) { return p.mean_steps; }, max_steps);

  svg << "<text x=\"" << num(margin) << "\" y=\"" << num(margin - 20)
      << "\" font-size=\"12\">fine-tuning: success rate (green, 0-1) and mean "
         "steps (purple, 0-" << num(max_steps) << ")</text>\n"
      << "<text x=\"" << num(margin + chart_w - 60) << "\" y=\""
      << num(margin + chart_h + 16) << "\" font-size=\"10\">updates ("
      << curve.back().updates << ")</text>\n</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
}

}  // namespace hausr
