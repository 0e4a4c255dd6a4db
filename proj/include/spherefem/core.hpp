#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spherefem {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-capacity point/vector for 2D/3D nodal data. The active dimension is
// carried by the surrounding mesh or field; unused entries stay zero.
using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec3& a, int m) { return std::sqrt(dot(a, a, m)); }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline bool nearly_equal(double a, double b, double rel, double abs_floor = 0.0) {
  const double scale = std::max({std::abs(a), std::abs(b), abs_floor});
  return std::abs(a - b) <= rel * scale + abs_floor;
}

}  // namespace spherefem
