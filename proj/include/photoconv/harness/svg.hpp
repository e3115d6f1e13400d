// Minimal SVG line plots: axes with end labels and one polyline per series.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "photoconv/harness/csv.hpp"

namespace photoconv::harness {

struct Series {
  std::string label;
  std::vector<double> x, y;  // NaN points break the line
};

inline void write_svg(std::ostream& out, const std::vector<Series>& series, const std::string& xlabel,
                      const std::string& ylabel, const std::string& title = "") {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 30, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<path d=\"M" << L << ' ' << T << " V" << H - B << " H" << W - R << "\" stroke=\"black\" fill=\"none\"/>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" font-size=\"12\">" << fmt(x0) << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(x1)
      << "</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(y0)
      << "</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << T + 10 << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(y1)
      << "</text>\n";
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"14\" text-anchor=\"middle\">"
      << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"14\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  if (!title.empty())
    out << "<text x=\"" << W / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 6];
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : " M") + fmt(px(s.x[i])) + ' ' + fmt(py(s.y[i]));
      pen = true;
    }
    out << "<path d=\"" << d << "\" stroke=\"" << color << "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" font-size=\"12\" text-anchor=\"end\" fill=\""
        << color << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace photoconv::harness
