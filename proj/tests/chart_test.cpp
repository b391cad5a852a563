#include "senf/chart.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "senf/error.hpp"
#include "test_util.hpp"

namespace senf::chart {
namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

// SVG y coordinates of the first polyline.
std::vector<double> polyline_ys(const std::string& svg) {
  std::smatch m;
  if (!std::regex_search(svg, m, std::regex("<polyline[^>]*points=\"([^\"]*)\"")))
    return {};
  std::vector<double> ys;
  std::istringstream in(m[1].str());
  std::string pair;
  while (in >> pair) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
  return ys;
}

ChartSpec two_points(bool inverted) {
  return {"Ranks", "hours", "rank", {{"afl", {{1.0, 1.0}, {2.0, 3.0}}}}, inverted, false};
}

TEST(RenderSvg, OnePolylinePerSeries) {
  const auto svg = render_svg(two_points(false));
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  EXPECT_NE(svg.find(">afl<"), std::string::npos);
  auto spec = two_points(false);
  spec.series.push_back({"libfuzzer", {{1.0, 2.0}}});
  EXPECT_EQ(count(render_svg(spec), "<polyline"), 2u);
}

TEST(RenderSvg, InvertedAxisDrawsSmallRanksHigher) {
  auto plain = polyline_ys(render_svg(two_points(false)));
  auto inverted = polyline_ys(render_svg(two_points(true)));
  ASSERT_EQ(plain.size(), 2u);
  ASSERT_EQ(inverted.size(), 2u);
  EXPECT_GT(plain[0], plain[1]);
  EXPECT_LT(inverted[0], inverted[1]);
}

TEST(RenderSvg, EscapesLabels) {
  auto spec = two_points(false);
  spec.series[0].label = "a<b&c";
  const auto svg = render_svg(spec);
  EXPECT_NE(svg.find("a&lt;b&amp;c"), std::string::npos);
  EXPECT_EQ(svg.find("a<b"), std::string::npos);
}

TEST(RenderSvg, DegenerateRangesAndLogAxis) {
  ChartSpec flat{"t", "x", "y", {{"s", {{5.0, 2.0}}}}, true, false};
  EXPECT_NO_THROW(render_svg(flat));
  ChartSpec log{"t", "alpha", "rank", {{"s", {{1e-8, 1.0}, {0.05, 2.0}}}}, true, true};
  const auto svg = render_svg(log);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
}

TEST(RenderSvg, Errors) {
  ChartSpec empty{"t", "x", "y", {}, false, false};
  EXPECT_THROW(render_svg(empty), InvalidArgument);
  ChartSpec no_points{"t", "x", "y", {{"s", {}}}, false, false};
  EXPECT_THROW(render_svg(no_points), InvalidArgument);
  ChartSpec unsorted{"t", "x", "y", {{"s", {{2, 1}, {1, 1}}}}, false, false};
  EXPECT_THROW(render_svg(unsorted), InvalidArgument);
  ChartSpec bad{"t", "x", "y", {{"s", {{1, NAN}}}}, false, false};
  EXPECT_THROW(render_svg(bad), InvalidArgument);
}

TEST(RenderChart, DeterministicFile) {
  testing::TempDir dir("chart");
  render_chart(two_points(true), dir / "a.svg");
  render_chart(two_points(true), dir / "b.svg");
  std::ifstream a(dir / "a.svg"), b(dir / "b.svg");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str(), render_svg(two_points(true)));
}

}  // namespace
}  // namespace senf::chart
