#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace senf::chart {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool y_inverted = false;
  bool x_log = false;
};

// Throws InvalidArgument for an empty series list, an empty series, or
// points not sorted by x.
std::string render_svg(const ChartSpec& spec);
void render_chart(const ChartSpec& spec, const std::filesystem::path& path);

}  // namespace senf::chart
