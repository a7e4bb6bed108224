#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace fleetpricer {

/// `v` rounded to 9 significant digits, the precision of every exported real.
inline double sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace fleetpricer
