#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace logpot {

/// Shortest round-trip decimal form, "inf" / "-inf" / "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace logpot
