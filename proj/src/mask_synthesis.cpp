#include "vesselsynth/mask_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vesselsynth/errors.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/serialization.hpp"

namespace vsynth {

namespace {
constexpr int kAlignmentSamples = 16;
constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr int kAnchorRadius = 12;
constexpr int kPatchPasses = 4;

// Center of the closest skeleton pixel already covered by the mask, within
// `radius` of p; p itself when there is none.
Point2 nearest_covered_skeleton_pixel(const RasterMask& m, const RasterMask& skeleton, Pixel p, int radius) {
  double best = std::numeric_limits<double>::infinity();
  Point2 out = p.center();
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double d = dx * dx + dy * dy;
      if (d < best && m.get(p.x + dx, p.y + dy) && skeleton.get(p.x + dx, p.y + dy)) {
        best = d;
        out = Pixel{p.x + dx, p.y + dy}.center();
      }
    }
  }
  return out;
}
}  // namespace

void SynthesisParams::validate() const {
  if (curve_order < BezierCurve::kMinOrder || curve_order > BezierCurve::kMaxOrder) {
    throw DomainError("curve_order must be 3, 4 or 5");
  }
  if (!(coverage_threshold > 0.0 && coverage_threshold <= 1.0)) {
    throw DomainError("coverage_threshold must be in (0, 1]");
  }
  if (max_curves < 1) throw DomainError("max_curves must be >= 1");
  if (!(width_root > 0.0) || !std::isfinite(width_root)) throw DomainError("width_root must be positive");
  if (!(width_decay > 0.0 && width_decay < 1.0)) throw DomainError("width_decay must be in (0, 1)");
  if (!(min_half_width > 0.0)) throw DomainError("min_half_width must be positive");
  if (!(angle_tolerance > 0.0) || !std::isfinite(angle_tolerance)) {
    throw DomainError("angle_tolerance must be positive");
  }
  if (orientation_window < 1) throw DomainError("orientation_window must be >= 1");
  if (hop_min < 1 || hop_max < hop_min) throw DomainError("require 1 <= hop_min <= hop_max");
  if (max_descent_iterations < 0) throw DomainError("max_descent_iterations must be >= 0");
}

double SynthesisParams::half_width_at_depth(int depth) const {
  return std::max(min_half_width, width_root * std::pow(width_decay, double(depth)));
}

OrientationField::OrientationField(const RasterMask& skeleton, int window)
    : width_(skeleton.width()), height_(skeleton.height()), window_(window) {
  if (window < 1) throw DomainError("orientation window must be >= 1");
  const GradientField g = sobel(skeleton);
  const std::size_t stride = std::size_t(width_) + 1;
  const std::size_t n = stride * (std::size_t(height_) + 1);
  jxx_.assign(n, 0.0);
  jyy_.assign(n, 0.0);
  jxy_.assign(n, 0.0);
  count_.assign(n, 0.0);
  for (int y = 0; y < height_; ++y) {
    double rxx = 0, ryy = 0, rxy = 0, rc = 0;
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = skeleton.index(x, y);
      rxx += g.gx[i] * g.gx[i];
      ryy += g.gy[i] * g.gy[i];
      rxy += g.gx[i] * g.gy[i];
      rc += skeleton.at(x, y) ? 1.0 : 0.0;
      const std::size_t o = (std::size_t(y) + 1) * stride + std::size_t(x) + 1;
      const std::size_t up = std::size_t(y) * stride + std::size_t(x) + 1;
      jxx_[o] = jxx_[up] + rxx;
      jyy_[o] = jyy_[up] + ryy;
      jxy_[o] = jxy_[up] + rxy;
      count_[o] = count_[up] + rc;
    }
  }
}

double OrientationField::box_sum(const std::vector<double>& t, int x0, int y0, int x1, int y1) const {
  const std::size_t stride = std::size_t(width_) + 1;
  auto at = [&](int x, int y) { return t[std::size_t(y) * stride + std::size_t(x)]; };
  return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
}

namespace {

double ridge_from_tensor(double jxx, double jyy, double jxy) {
  double ridge = 0.5 * std::atan2(2.0 * jxy, jxx - jyy) + kHalfPi;
  while (ridge > kHalfPi) ridge -= std::numbers::pi;
  while (ridge <= -kHalfPi) ridge += std::numbers::pi;
  return ridge;
}

}  // namespace

std::optional<double> OrientationField::try_orientation(Pixel p) const {
  const int x0 = std::max(0, p.x - window_), x1 = std::min(width_ - 1, p.x + window_);
  const int y0 = std::max(0, p.y - window_), y1 = std::min(height_ - 1, p.y + window_);
  if (x0 > x1 || y0 > y1) return std::nullopt;
  if (box_sum(count_, x0, y0, x1, y1) < 0.5) return std::nullopt;
  return ridge_from_tensor(box_sum(jxx_, x0, y0, x1, y1), box_sum(jyy_, x0, y0, x1, y1),
                           box_sum(jxy_, x0, y0, x1, y1));
}

double OrientationField::orientation(Point2 p) const {
  auto r = try_orientation(round_to_pixel(p));
  if (!r) throw NoSignalError("no skeleton pixels around the query point");
  return *r;
}

double local_orientation(const SkeletonRaster& skeleton, Point2 p, int window) {
  const RasterMask& m = skeleton.mask;
  const Pixel c = round_to_pixel(p);
  if (!m.in_bounds(c.x, c.y)) throw DomainError("query point outside the canvas");
  if (window < 1) throw DomainError("orientation window must be >= 1");
  const int x0 = std::max(0, c.x - window), x1 = std::min(m.width() - 1, c.x + window);
  const int y0 = std::max(0, c.y - window), y1 = std::min(m.height() - 1, c.y + window);
  bool any = false;
  for (int y = y0; y <= y1 && !any; ++y) {
    for (int x = x0; x <= x1 && !any; ++x) any = m.at(x, y);
  }
  if (!any) throw NoSignalError("no skeleton pixels around the query point");
  // Sobel over the patch plus a one-pixel rim, replicated at the canvas edge.
  double jxx = 0, jyy = 0, jxy = 0;
  auto v = [&](int x, int y) {
    x = std::clamp(x, 0, m.width() - 1);
    y = std::clamp(y, 0, m.height() - 1);
    return m.at(x, y) ? 1.0 : 0.0;
  };
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double gx = (v(x + 1, y - 1) + 2 * v(x + 1, y) + v(x + 1, y + 1)) -
                        (v(x - 1, y - 1) + 2 * v(x - 1, y) + v(x - 1, y + 1));
      const double gy = (v(x - 1, y + 1) + 2 * v(x, y + 1) + v(x + 1, y + 1)) -
                        (v(x - 1, y - 1) + 2 * v(x, y - 1) + v(x + 1, y - 1));
      jxx += gx * gx;
      jyy += gy * gy;
      jxy += gx * gy;
    }
  }
  return ridge_from_tensor(jxx, jyy, jxy);
}

double axial_deviation(double direction, double axis) {
  double d = std::fmod(std::abs(direction - axis), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

double alignment_error(const BezierCurve& curve, const OrientationField& field) {
  double total = 0.0;
  for (int k = 0; k < kAlignmentSamples; ++k) {
    const double t = (k + 0.5) / kAlignmentSamples;
    const Point2 d = derivative(curve, t, 1);
    const auto ridge = field.try_orientation(round_to_pixel(evaluate(curve, t)));
    if (!ridge || d.norm() <= 1e-12) {
      total += kHalfPi;
    } else {
      total += axial_deviation(std::atan2(d.y, d.x), *ridge);
    }
  }
  return total / kAlignmentSamples;
}

PlacedCurve place_curve(const SkeletonRaster& skeleton, const OrientationField& field, int branch,
                        std::size_t start_index, const SynthesisParams& params, KeyedRng& rng,
                        const WidthFn& half_width, std::optional<Point2> anchor,
                        std::optional<std::size_t> last_index) {
  if (branch < 0 || branch >= int(skeleton.branches.size())) throw DomainError("branch out of range");
  const SkeletonBranch& br = skeleton.branches[std::size_t(branch)];
  const std::size_t last = std::min(br.path.size() - 1, last_index.value_or(br.path.size() - 1));
  if (start_index >= last) throw BranchExhausted("no skeleton pixel ahead on the branch");

  // Short remainders are taken whole so no tail under hop_min is left behind.
  const std::size_t remaining = last - start_index;
  std::size_t hop;
  if (remaining <= std::size_t(params.hop_max)) {
    hop = remaining;
  } else {
    const int upper = int(std::min<std::size_t>(std::size_t(params.hop_max), remaining - std::size_t(params.hop_min)));
    hop = std::size_t(rng.uniform_int(params.hop_min, std::max(params.hop_min, upper)));
  }
  const std::size_t end_index = start_index + hop;

  const Point2 a = anchor.value_or(br.path[start_index].center());
  const Point2 b = br.path[end_index].center();
  const int order = params.curve_order;
  std::vector<Point2> pts;
  pts.reserve(std::size_t(order) + 1);
  for (int i = 0; i <= order; ++i) pts.push_back(a + (b - a) * (double(i) / order));
  const double ws = half_width(branch, start_index);
  const double we = std::min(ws, half_width(branch, end_index));
  BezierCurve curve(std::move(pts), ws, we);

  double best = alignment_error(curve, field);
  PlacedCurve out{curve, {}};
  out.placement.branch = branch;
  out.placement.start_index = start_index;
  out.placement.end_index = end_index;
  out.placement.depth = br.depth.empty() ? 0 : br.depth[start_index];
  out.placement.theta_initial = best;

  // Coordinate descent over the interior control points with per-coordinate
  // step halving.
  const int coords = 2 * (order - 1);
  std::vector<double> step(std::size_t(coords), std::max(1.0, distance(a, b) / 4.0));
  constexpr double kMinStep = 1e-3;
  for (int iter = 0; iter < params.max_descent_iterations && best >= params.angle_tolerance; ++iter) {
    bool alive = false;
    for (int c = 0; c < coords; ++c) {
      double& s = step[std::size_t(c)];
      if (s < kMinStep) continue;
      alive = true;
      const int point = 1 + c / 2;
      const Point2 base = curve.control_points()[std::size_t(point)];
      bool improved = false;
      for (double sign : {1.0, -1.0}) {
        Point2 trial = base;
        (c % 2 == 0 ? trial.x : trial.y) += sign * s;
        curve.set_control_point(point, trial);
        const double e = alignment_error(curve, field);
        if (e < best) {
          best = e;
          improved = true;
          break;
        }
      }
      if (!improved) {
        curve.set_control_point(point, base);
        s *= 0.5;
      }
    }
    if (!alive) break;
  }
  out.curve = curve;
  out.placement.theta_fit = best;
  return out;
}

namespace {

WidthFn depth_widths(const SkeletonRaster& skeleton, const SynthesisParams& params) {
  return [&skeleton, &params](int branch, std::size_t index) {
    const auto& br = skeleton.branches[std::size_t(branch)];
    const int depth = br.depth.empty() ? 0 : br.depth[index];
    return params.half_width_at_depth(depth);
  };
}

}  // namespace

BezierCurve place_curve(const SkeletonRaster& skeleton, Point2 start, const SynthesisParams& params,
                        KeyedRng& rng) {
  params.validate();
  const Pixel p = round_to_pixel(start);
  if (!skeleton.mask.in_bounds(p.x, p.y) || !skeleton.mask.at(p)) {
    throw DomainError("start point is not on the skeleton");
  }
  for (const auto& br : skeleton.branches) {
    for (std::size_t i = 0; i + 1 < br.path.size(); ++i) {
      if (br.path[i] == p) {
        OrientationField field(skeleton.mask, params.orientation_window);
        return place_curve(skeleton, field, br.id, i, params, rng, depth_widths(skeleton, params)).curve;
      }
    }
  }
  throw BranchExhausted("start point has no continuation along any branch");
}

SynthesisResult synthesize_mask(const SkeletonRaster& skeleton, const SynthesisParams& params,
                                const WidthFn& width, const CurveShaper& shape) {
  params.validate();
  const std::size_t skeleton_total = skeleton.mask.count();
  if (skeleton_total == 0) throw DomainError("skeleton is empty");
  const int w = skeleton.mask.width(), h = skeleton.mask.height();
  const OrientationField field(skeleton.mask, params.orientation_window);
  const WidthFn half_width = width ? width : depth_widths(skeleton, params);

  SynthesisResult result;
  result.mask = RasterMask(w, h);
  auto bits = result.mask.bits();
  auto skel = skeleton.mask.bits();
  std::size_t covered = 0;
  const KeyedRng base = KeyedRng(mix64(params.seed)).child(0x5f3759dfULL);

  bool capped = false;
  std::uint64_t placed_count = 0;
  auto reached = [&] { return double(covered) / double(skeleton_total) >= params.coverage_threshold; };
  // Returns false once the curve cap stops the run.
  auto add_curve = [&](const SkeletonBranch& br, std::size_t idx, std::optional<Point2> anchor,
                       std::optional<std::size_t> last) -> std::optional<std::size_t> {
    if (int(result.curves.size()) >= params.max_curves) {
      capped = true;
      return std::nullopt;
    }
    KeyedRng rng = base.child(std::uint64_t(br.id)).child(placed_count++);
    PlacedCurve placed = place_curve(skeleton, field, br.id, idx, params, rng, half_width, anchor, last);
    if (shape) shape(placed.curve, placed.placement);
    for (auto i : stroke_pixels(placed.curve, w, h)) {
      if (!bits[i]) {
        bits[i] = 1;
        if (skel[i]) ++covered;
      }
    }
    const std::size_t end = placed.placement.end_index;
    result.curves.push_back(std::move(placed.curve));
    result.placements.push_back(placed.placement);
    result.coverage_history.push_back(double(covered) / double(skeleton_total));
    return end;
  };

  // Main pass: chain curves along each vessel, root first.
  for (const auto& br : skeleton.branches) {
    if (capped || reached()) break;
    const std::size_t n = br.path.size();
    if (n < 2) continue;
    // Side vessels open inside their parent's stroke; start from the last
    // covered pixel so the new curve is attached to it.
    std::size_t idx = 0;
    while (idx + 1 < n && result.mask.at(br.path[idx + 1])) ++idx;
    std::optional<Point2> anchor;
    if (!result.curves.empty() && !result.mask.at(br.path[idx])) {
      anchor = nearest_covered_skeleton_pixel(result.mask, skeleton.mask, br.path[idx], kAnchorRadius);
    }
    while (idx + 1 < n && !capped && !reached()) {
      const auto end = add_curve(br, idx, anchor, std::nullopt);
      if (!end) break;
      idx = *end;
      anchor.reset();
    }
  }

  // Patch passes: a curve over every run of uncovered pixels, from the
  // covered pixel before the run to the first one after it.
  for (int pass = 0; pass < kPatchPasses && !capped && !reached(); ++pass) {
    const std::size_t before = covered;
    for (const auto& br : skeleton.branches) {
      if (capped || reached()) break;
      const std::size_t n = br.path.size();
      std::size_t i = 1;
      while (i < n && !capped && !reached()) {
        if (result.mask.at(br.path[i])) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j + 1 < n && !result.mask.at(br.path[j + 1])) ++j;
        const std::size_t start = i - 1;
        std::optional<Point2> anchor;
        if (!result.mask.at(br.path[start])) anchor = nearest_covered_skeleton_pixel(result.mask, skeleton.mask, br.path[start], kAnchorRadius);
        const auto end = add_curve(br, start, anchor, std::min(n - 1, j + 1));
        if (!end) break;
        i = std::max(*end, i) + 1;
      }
    }
    if (covered == before) break;
  }

  result.coverage = double(covered) / double(skeleton_total);
  result.coverage_warning = result.coverage < params.coverage_threshold;

  nlohmann::json m;
  m["synthesis_params"] = to_json(params);
  m["skeleton"] = {{"pixels", skeleton_total}, {"branches", skeleton.branches.size()}};
  m["coverage"] = result.coverage;
  m["coverage_warning"] = result.coverage_warning;
  m["curve_cap_reached"] = capped;
  m["curves"] = nlohmann::json::array();
  for (const auto& c : result.curves) m["curves"].push_back(to_json(c));
  m["foreground_pixels"] = result.mask.count();
  result.manifest = std::move(m);
  return result;
}

SynthesisResult generate_sample(const SkeletonParams& skel_params, const SynthesisParams& synth_params) {
  synth_params.validate();
  const SkeletonNode root = generate_skeleton(skel_params);
  if (root.length < 1.0) throw DomainError("skeleton is empty: root segment pruned by the canvas");
  const SkeletonRaster raster = rasterize_skeleton(root, skel_params.canvas_width, skel_params.canvas_height);
  const CloseResult closed = close_skeleton(raster);
  SynthesisResult result = synthesize_mask(closed.skeleton, synth_params);
  result.manifest["skeleton_params"] = to_json(skel_params);
  result.manifest["skeleton"]["tree"] = to_json(root);
  result.manifest["skeleton"]["nodes"] = count_nodes(root);
  result.manifest["skeleton"]["close_iterations"] = closed.iterations;
  result.manifest["skeleton"]["connected"] = closed.connected;
  result.manifest["seed"] = skel_params.seed;
  return result;
}

}  // namespace vsynth
