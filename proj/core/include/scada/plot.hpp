#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace scada {

struct Series {
  std::string label;
  std::vector<double> y;  // x is the index
  std::string color = "#1f77b4";
};

struct PlotOptions {
  std::string title;
  std::string x_label = "step";
  std::string y_label;
  int width = 720;
  int height = 420;
};

/// Line chart as a standalone SVG document. Non-finite points are skipped.
std::string line_chart_svg(const std::vector<Series>& series, const PlotOptions& options);
void write_line_chart(const std::vector<Series>& series, const PlotOptions& options,
                      const std::filesystem::path& path);

}  // namespace scada
