#pragma once

#include <span>
#include <vector>

#include "vesselsynth/geometry.hpp"
#include "vesselsynth/raster.hpp"

namespace vsynth {

/// Bezier curve of order 3, 4 or 5 carrying a linearly tapering half-width.
///
/// Widths are vessel half-widths in pixels; the profile is linear in the
/// curve parameter and must not widen distally (width_start >= width_end > 0).
class BezierCurve {
 public:
  static constexpr int kMinOrder = 3;
  static constexpr int kMaxOrder = 5;

  BezierCurve(std::vector<Point2> control_points, double width_start, double width_end);

  int order() const { return int(points_.size()) - 1; }
  std::span<const Point2> control_points() const { return points_; }
  const Point2& front() const { return points_.front(); }
  const Point2& back() const { return points_.back(); }
  double width_start() const { return width_start_; }
  double width_end() const { return width_end_; }
  double width_at(double t) const { return width_start_ + (width_end_ - width_start_) * t; }

  void set_control_point(int i, Point2 p);
  void set_widths(double width_start, double width_end);

  bool operator==(const BezierCurve&) const = default;

 private:
  std::vector<Point2> points_;
  double width_start_;
  double width_end_;
};

/// Bernstein-basis evaluation; throws DomainError for t outside [0, 1].
Point2 evaluate(const BezierCurve& curve, double t);

/// Repeated linear interpolation of the control polygon.
Point2 evaluate_de_casteljau(const BezierCurve& curve, double t);

/// First or second parametric derivative from the hodograph.
Point2 derivative(const BezierCurve& curve, double t, int order);

/// Unsigned curvature |x'y'' - y'x''| / |B'|^3. Throws SingularityError when
/// the tangent vanishes.
double curvature(const BezierCurve& curve, double t);

struct CurveSample {
  Point2 point;
  double t = 0.0;
};

/// Polyline approximation: segments are split until the chord deviates from
/// the curve by less than `tolerance` and consecutive samples are closer
/// than one pixel.
std::vector<CurveSample> flatten(const BezierCurve& curve, double tolerance = 0.25);

/// Linear indices (row-major, ascending) of the pixels covered by the curve's
/// stroke on a width x height canvas.
std::vector<std::size_t> stroke_pixels(const BezierCurve& curve, int width, int height);

enum class RasterStatus { ok, outside_canvas };

/// Render the curve's stroke. A curve that misses the canvas yields a valid
/// empty mask and `RasterStatus::outside_canvas`.
RasterMask rasterize(const BezierCurve& curve, int width, int height,
                     RasterStatus* status = nullptr);

}  // namespace vsynth
