#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace gstrument::toy {

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

struct LogRow {
  std::size_t step = 0;
  double loss_d = kNoValue;
  double loss_g = kNoValue;
  double loss_eq2 = kNoValue;
  double loss_eq3 = kNoValue;
};

/// "step,loss_D,loss_G,loss_eq2,loss_eq3"; absent values are left empty.
inline std::string log_to_csv(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out.precision(9);
  out << "step,loss_D,loss_G,loss_eq2,loss_eq3\n";
  auto cell = [&out](double v) {
    if (!std::isnan(v)) out << v;
  };
  for (const auto& r : rows) {
    out << r.step << ',';
    cell(r.loss_d);
    out << ',';
    cell(r.loss_g);
    out << ',';
    cell(r.loss_eq2);
    out << ',';
    cell(r.loss_eq3);
    out << '\n';
  }
  return out.str();
}

}  // namespace gstrument::toy
