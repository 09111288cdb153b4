#pragma once

#include <cmath>
#include <cstdint>

namespace vsynth {

/// Continuous canvas coordinate. Pixel (x, y) has its center at (x, y).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  constexpr Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Point2&) const = default;

  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Point2 operator*(double s, Point2 p) { return p * s; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

/// Integer raster location.
struct Pixel {
  int x = 0;
  int y = 0;

  constexpr bool operator==(const Pixel&) const = default;
  Point2 center() const { return {double(x), double(y)}; }
};

inline Pixel round_to_pixel(Point2 p) {
  return {int(std::lround(p.x)), int(std::lround(p.y))};
}

}  // namespace vsynth
