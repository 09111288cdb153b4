#include "vesselsynth/bezier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "vesselsynth/errors.hpp"

namespace vsynth {

namespace {

void check_widths(double width_start, double width_end) {
  if (!(std::isfinite(width_start) && std::isfinite(width_end))) {
    throw DomainError("curve widths must be finite");
  }
  if (!(width_end > 0.0)) throw DomainError("curve width_end must be positive");
  if (width_start < width_end) throw DomainError("curve must taper: width_start >= width_end");
}

void check_parameter(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("curve parameter t=" + std::to_string(t) + " outside [0, 1]");
  }
}

constexpr std::array<std::array<double, 6>, 6> kBinomial = {{
    {1, 0, 0, 0, 0, 0},
    {1, 1, 0, 0, 0, 0},
    {1, 2, 1, 0, 0, 0},
    {1, 3, 3, 1, 0, 0},
    {1, 4, 6, 4, 1, 0},
    {1, 5, 10, 10, 5, 1},
}};

// Bernstein sum over an arbitrary point list (used for the curve and its
// hodographs).
Point2 bernstein(std::span<const Point2> pts, double t) {
  const int n = int(pts.size()) - 1;
  if (n == 0) return pts[0];
  const double u = 1.0 - t;
  // Endpoints are returned exactly.
  if (t == 0.0) return pts.front();
  if (t == 1.0) return pts.back();
  std::array<double, 6> tp{}, up{};
  tp[0] = up[0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    tp[i] = tp[i - 1] * t;
    up[i] = up[i - 1] * u;
  }
  Point2 acc;
  for (int i = 0; i <= n; ++i) {
    double b = kBinomial[n][i] * tp[i] * up[n - i];
    acc.x += b * pts[i].x;
    acc.y += b * pts[i].y;
  }
  return acc;
}

std::vector<Point2> hodograph(std::span<const Point2> pts) {
  const int n = int(pts.size()) - 1;
  std::vector<Point2> d;
  d.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) d.push_back((pts[i + 1] - pts[i]) * double(n));
  return d;
}

}  // namespace

BezierCurve::BezierCurve(std::vector<Point2> control_points, double width_start, double width_end)
    : points_(std::move(control_points)), width_start_(width_start), width_end_(width_end) {
  const int n = int(points_.size()) - 1;
  if (n < kMinOrder || n > kMaxOrder) {
    throw DomainError("Bezier order must be 3, 4 or 5 (got " + std::to_string(points_.size()) +
                      " control points)");
  }
  for (const auto& p : points_) {
    if (!p.finite()) throw DomainError("control points must be finite");
  }
  check_widths(width_start_, width_end_);
}

void BezierCurve::set_control_point(int i, Point2 p) {
  if (i < 0 || i >= int(points_.size())) throw DomainError("control point index out of range");
  if (!p.finite()) throw DomainError("control points must be finite");
  points_[std::size_t(i)] = p;
}

void BezierCurve::set_widths(double width_start, double width_end) {
  check_widths(width_start, width_end);
  width_start_ = width_start;
  width_end_ = width_end;
}

Point2 evaluate(const BezierCurve& curve, double t) {
  check_parameter(t);
  return bernstein(curve.control_points(), t);
}

Point2 evaluate_de_casteljau(const BezierCurve& curve, double t) {
  check_parameter(t);
  auto cp = curve.control_points();
  std::array<Point2, 6> work{};
  std::copy(cp.begin(), cp.end(), work.begin());
  for (std::size_t level = cp.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) work[i] = work[i] * (1.0 - t) + work[i + 1] * t;
  }
  return work[0];
}

Point2 derivative(const BezierCurve& curve, double t, int order) {
  if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
  check_parameter(t);
  auto d1 = hodograph(curve.control_points());
  if (order == 1) return bernstein(d1, t);
  auto d2 = hodograph(d1);
  return bernstein(d2, t);
}

double curvature(const BezierCurve& curve, double t) {
  Point2 d1 = derivative(curve, t, 1);
  double speed = d1.norm();
  if (speed <= 1e-12) throw SingularityError("curvature undefined: tangent vanishes");
  Point2 d2 = derivative(curve, t, 2);
  return std::abs(cross(d1, d2)) / (speed * speed * speed);
}

namespace {

constexpr int kMaxSplitDepth = 30;

void flatten_range(const BezierCurve& curve, double t0, Point2 p0, double t1, Point2 p1,
                   double tolerance, int depth, std::vector<CurveSample>& out) {
  const double tm = 0.5 * (t0 + t1);
  const Point2 pm = evaluate(curve, tm);
  if (depth < kMaxSplitDepth) {
    const Point2 chord = p1 - p0;
    const double len = chord.norm();
    double deviation =
        len > 0.0 ? std::abs(cross(chord, pm - p0)) / len : distance(pm, p0);
    if (deviation >= tolerance || len >= 1.0 || distance(pm, p0) >= 1.0) {
      flatten_range(curve, t0, p0, tm, pm, tolerance, depth + 1, out);
      flatten_range(curve, tm, pm, t1, p1, tolerance, depth + 1, out);
      return;
    }
  }
  out.push_back({p1, t1});
}

}  // namespace

std::vector<CurveSample> flatten(const BezierCurve& curve, double tolerance) {
  std::vector<CurveSample> out;
  const Point2 start = curve.front();
  const Point2 end = curve.back();
  out.push_back({start, 0.0});
  // Split once up front so curves whose endpoints coincide (loops) are still
  // probed in their interior.
  const Point2 mid = evaluate(curve, 0.5);
  flatten_range(curve, 0.0, start, 0.5, mid, tolerance, 0, out);
  flatten_range(curve, 0.5, mid, 1.0, end, tolerance, 0, out);
  return out;
}

std::vector<std::size_t> stroke_pixels(const BezierCurve& curve, int width, int height) {
  std::vector<std::size_t> pixels;
  if (width <= 0 || height <= 0) return pixels;
  const auto samples = flatten(curve);

  double max_w = std::max(curve.width_start(), curve.width_end());
  double lo_x = samples[0].point.x, hi_x = lo_x, lo_y = samples[0].point.y, hi_y = lo_y;
  for (const auto& s : samples) {
    lo_x = std::min(lo_x, s.point.x);
    hi_x = std::max(hi_x, s.point.x);
    lo_y = std::min(lo_y, s.point.y);
    hi_y = std::max(hi_y, s.point.y);
  }
  const int x0 = std::max(0, int(std::floor(lo_x - max_w - 1.0)));
  const int y0 = std::max(0, int(std::floor(lo_y - max_w - 1.0)));
  const int x1 = std::min(width - 1, int(std::ceil(hi_x + max_w + 1.0)));
  const int y1 = std::min(height - 1, int(std::ceil(hi_y + max_w + 1.0)));
  if (x0 > x1 || y0 > y1) return pixels;

  const int bw = x1 - x0 + 1;
  const int bh = y1 - y0 + 1;
  std::vector<std::uint8_t> local(std::size_t(bw) * std::size_t(bh), 0);
  auto mark = [&](int x, int y) {
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) {
      local[std::size_t(y - y0) * std::size_t(bw) + std::size_t(x - x0)] = 1;
    }
  };

  constexpr double kEps = 1e-9;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const Point2 a = samples[k].point;
    const Point2 b = samples[k + 1].point;
    const double wa = curve.width_at(samples[k].t);
    const double wb = curve.width_at(samples[k + 1].t);
    const double w = std::max(wa, wb);
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    const int sx0 = std::max(x0, int(std::floor(std::min(a.x, b.x) - w)));
    const int sx1 = std::min(x1, int(std::ceil(std::max(a.x, b.x) + w)));
    const int sy0 = std::max(y0, int(std::floor(std::min(a.y, b.y) - w)));
    const int sy1 = std::min(y1, int(std::ceil(std::max(a.y, b.y) + w)));
    for (int y = sy0; y <= sy1; ++y) {
      for (int x = sx0; x <= sx1; ++x) {
        const Point2 c{double(x), double(y)};
        double u = len2 > 0.0 ? std::clamp(dot(c - a, ab) / len2, 0.0, 1.0) : 0.0;
        const Point2 q = a + ab * u;
        const double r = wa + (wb - wa) * u;
        if (distance(c, q) <= r + kEps) mark(x, y);
      }
    }
  }
  // The nearest pixel of every sample keeps the stroke 8-connected even for
  // sub-pixel widths.
  for (const auto& s : samples) {
    Pixel p = round_to_pixel(s.point);
    mark(p.x, p.y);
  }

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (local[std::size_t(y - y0) * std::size_t(bw) + std::size_t(x - x0)]) {
        pixels.push_back(std::size_t(y) * std::size_t(width) + std::size_t(x));
      }
    }
  }
  return pixels;
}

RasterMask rasterize(const BezierCurve& curve, int width, int height, RasterStatus* status) {
  if (width < 8 || height < 8) throw DomainError("canvas must be at least 8x8");
  RasterMask mask(width, height);
  auto bits = mask.bits();
  const auto pixels = stroke_pixels(curve, width, height);
  for (auto i : pixels) bits[i] = 1;
  if (status) *status = pixels.empty() ? RasterStatus::outside_canvas : RasterStatus::ok;
  return mask;
}

}  // namespace vsynth
