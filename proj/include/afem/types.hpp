#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace afem {

using Vec3 = std::array<double, 3>;
using VertexId = std::int32_t;
using ElementId = std::int32_t;
using FaceId = std::int32_t;
using DofId = std::int32_t;

inline constexpr ElementId kNoElement = -1;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Axis-aligned box [lo[i], hi[i]] in each coordinate direction.
struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  double volume() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  bool contains_strictly(const Vec3& x) const {
    for (int i = 0; i < 3; ++i)
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    return true;
  }
};

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid geometry or parameter values (degenerate box, element, etc).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Refinement closure did not terminate within the configured depth.
class RefinementError : public Error {
 public:
  using Error::Error;
};

}  // namespace afem
