#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kvsim {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Static SVG line chart. Non-positive values are dropped on logarithmic axes
/// and non-finite values always. Output depends only on the inputs.
void write_line_plot(std::ostream& out, const std::vector<PlotSeries>& series, const PlotOptions& options);
void write_line_plot(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
                     const PlotOptions& options);

}  // namespace kvsim
