#pragma once

#include <charconv>
#include <ostream>
#include <string>

#include "spherefem/core.hpp"

namespace spherefem {

// Shortest decimal representation that round-trips to the same double, so
// output files diff cleanly across runs.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::ostream& csv_value(std::ostream& os, double v) {
  return os << format_double(v);
}

}  // namespace spherefem
