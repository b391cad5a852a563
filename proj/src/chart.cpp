#include "senf/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "io.hpp"
#include "senf/error.hpp"

namespace senf::chart {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `count` ticks.
double nice_step(double span, int count) {
  const double raw = span / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1 : r < 3.5 ? 2 : r < 7.5 ? 5 : 10) * mag;
}

struct Axis {
  double lo, hi;
  std::vector<double> ticks;
};

Axis make_axis(double lo, double hi, bool log_scale) {
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Axis a{lo, hi, {}};
  if (log_scale) {
    for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) a.ticks.push_back(e);
    return a;
  }
  const double step = nice_step(hi - lo, 5);
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + step * 1e-9; t += step)
    a.ticks.push_back(std::fabs(t) < step * 1e-9 ? 0.0 : t);
  return a;
}

}  // namespace

std::string render_svg(const ChartSpec& spec) {
  if (spec.series.empty()) throw InvalidArgument("chart needs at least one series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto tx = [&](double x) { return spec.x_log ? std::log10(x) : x; };
  for (const auto& s : spec.series) {
    if (s.points.empty()) throw InvalidArgument("series '" + s.label + "' has no points");
    if (!std::is_sorted(s.points.begin(), s.points.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; }))
      throw InvalidArgument("series '" + s.label + "' is not sorted by x");
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (spec.x_log && x <= 0.0))
        throw InvalidArgument("series '" + s.label + "' has a non-plottable point");
      xmin = std::min(xmin, tx(x));
      xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const Axis xa = make_axis(xmin, xmax, spec.x_log);
  const Axis ya = make_axis(ymin, ymax, false);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xa.lo) / (xa.hi - xa.lo) * pw; };
  auto py = [&](double y) {
    double f = (y - ya.lo) / (ya.hi - ya.lo);
    if (spec.y_inverted) f = 1.0 - f;
    return kTop + (1.0 - f) * ph;
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + escape(spec.title) + "</text>\n";

  // Axes and ticks.
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(kLeft + pw) +
         "\" y2=\"" + fmt(kTop + ph) + "\"/>\n";
  out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(kTop + ph) + "\"/>\n";
  for (double t : xa.ticks)
    out += "<line x1=\"" + fmt(px(t)) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(px(t)) +
           "\" y2=\"" + fmt(kTop + ph + 5) + "\"/>\n";
  for (double t : ya.ticks)
    out += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(py(t)) + "\" x2=\"" + fmt(kLeft) +
           "\" y2=\"" + fmt(py(t)) + "\"/>\n";
  out += "</g>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double t : xa.ticks)
    out += "<text x=\"" + fmt(px(t)) + "\" y=\"" + fmt(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + escape(label(spec.x_log ? std::pow(10.0, t) : t)) +
           "</text>\n";
  for (double t : ya.ticks)
    out += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(t) + 4) +
           "\" text-anchor=\"end\">" + escape(label(t)) + "</text>\n";
  out += "</g>\n";
  out += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 15) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(spec.x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
         fmt(kTop + ph / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

  // Series.
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      if (k) out += ' ';
      out += fmt(px(tx(s.points[k].first))) + "," + fmt(py(s.points[k].second));
    }
    out += "\"/>\n";
    for (auto [x, y] : s.points)
      out += "<circle cx=\"" + fmt(px(tx(x))) + "\" cy=\"" + fmt(py(y)) + "\" r=\"2.5\" fill=\"" +
             color + "\"/>\n";
  }

  // Legend.
  out += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    const double x = kLeft + pw + 15;
    out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(x + 20) + "\" y2=\"" +
           fmt(y) + "\" stroke=\"" + kPalette[i % std::size(kPalette)] +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt(x + 26) + "\" y=\"" + fmt(y + 4) + "\">" +
           escape(spec.series[i].label) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

void render_chart(const ChartSpec& spec, const std::filesystem::path& path) {
  io::write_text_atomic(path, render_svg(spec));
}

}  // namespace senf::chart
