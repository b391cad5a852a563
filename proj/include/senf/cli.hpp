#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "senf/chart.hpp"
#include "senf/sensitivity.hpp"

namespace senf::cli {

// Exit statuses of the senf tool.
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kUsageError = 2;

// Runs one senf subcommand.  args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:step", "x,y,z" or a single value.
std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

// One line per fuzzer, ranks on an inverted y axis.
chart::ChartSpec sweep_chart(const SweepSeries& series, const std::string& title,
                             const std::string& x_label, double x_scale = 1.0);

}  // namespace senf::cli
