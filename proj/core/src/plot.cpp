#include "scada/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "scada/error.hpp"

namespace scada {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const PlotOptions& o) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = o.width - left - right;
  const double ph = o.height - top - bottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) hi = lo + 1;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double y) { return top + ph * (1.0 - (y - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << o.width / 2.0 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(o.title)
      << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<line x1=\"" << left - 4 << "\" x2=\"" << left << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
        << "\" stroke=\"#444\"/><text x=\"" << left - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
        << num(v) << "</text>\n";
    const double x = xmax * t / 4.0;
    svg << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << num(x)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << o.height - 10 << "\" text-anchor=\"middle\">"
      << escape(o.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(o.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    svg << "<polyline fill=\"none\" stroke=\"" << escape(s.color) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i)
      if (std::isfinite(s.y[i])) svg << px(static_cast<double>(i)) << ',' << py(s.y[i]) << ' ';
    svg << "\"/>\n";
    const double ly = top + 16.0 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << escape(s.color) << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 42 << "\" y=\""
        << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_line_chart(const std::vector<Series>& series, const PlotOptions& options,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write plot " + path.string());
  out << line_chart_svg(series, options);
}

}  // namespace scada
