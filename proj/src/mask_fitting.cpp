#include "vesselsynth/mask_fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "vesselsynth/errors.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/parallel.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/vessel_metrics.hpp"

namespace vsynth {

void FitParams::validate() const {
  if (curve_order < BezierCurve::kMinOrder || curve_order > BezierCurve::kMaxOrder) {
    throw DomainError("curve_order must be 3, 4 or 5");
  }
  if (budget < 1) throw DomainError("budget must be >= 1");
  if (!(coverage_target > 0.0 && coverage_target <= 1.0)) throw DomainError("coverage_target must be in (0, 1]");
  if (!(min_gain >= 0.0)) throw DomainError("min_gain must be >= 0");
  if (hop_min < 1 || hop_max < hop_min) throw DomainError("require 1 <= hop_min <= hop_max");
}

RasterMask render_curves(std::span<const BezierCurve> curves, int width, int height) {
  RasterMask m(width, height);
  auto bits = m.bits();
  for (const auto& c : curves) {
    for (auto i : stroke_pixels(c, width, height)) bits[i] = 1;
  }
  return m;
}

namespace {

// 4-neighbors first so walks do not cut the corners of L-shaped steps.
constexpr std::array<Pixel, 8> kWalkOrder = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

struct PendingBranch {
  Pixel junction;
  Pixel first;
  int parent = -1;
  int depth = 0;
  bool is_root = false;
};

}  // namespace

SkeletonRaster skeleton_from_mask(const RasterMask& skeleton, std::span<const double> priority) {
  if (priority.size() != skeleton.size()) throw ShapeError("priority map does not match the skeleton");
  SkeletonRaster s;
  s.mask = skeleton;
  s.node_index.assign(skeleton.size(), -1);
  std::vector<std::uint8_t> visited(skeleton.size(), 0);
  const auto cc = connected_components(skeleton, 8);

  // Root pixel of each component: highest priority, first in scan order on ties.
  std::vector<Pixel> roots(cc.components.size());
  std::vector<double> best(cc.components.size(), -1.0);
  for (int y = 0; y < skeleton.height(); ++y) {
    for (int x = 0; x < skeleton.width(); ++x) {
      const int l = cc.labels[skeleton.index(x, y)];
      if (l == 0) continue;
      const double p = priority[skeleton.index(x, y)];
      if (p > best[std::size_t(l - 1)]) {
        best[std::size_t(l - 1)] = p;
        roots[std::size_t(l - 1)] = {x, y};
      }
    }
  }

  auto unvisited = [&](int x, int y) {
    return skeleton.in_bounds(x, y) && skeleton.at(x, y) && !visited[skeleton.index(x, y)];
  };

  for (const Pixel& root : roots) {
    std::vector<PendingBranch> stack{{root, root, -1, 0, true}};
    while (!stack.empty()) {
      const PendingBranch pb = stack.back();
      stack.pop_back();
      SkeletonBranch br;
      if (pb.is_root) {
        if (visited[skeleton.index(root.x, root.y)]) continue;
        visited[skeleton.index(root.x, root.y)] = 1;
        br.path = {root};
      } else {
        if (visited[skeleton.index(pb.first.x, pb.first.y)]) continue;
        visited[skeleton.index(pb.first.x, pb.first.y)] = 1;
        br.path = {pb.junction, pb.first};
      }
      br.id = int(s.branches.size());
      br.parent = pb.parent;
      std::vector<PendingBranch> sides;
      while (true) {
        const Pixel cur = br.path.back();
        std::vector<Pixel> cand;
        for (const auto& d : kWalkOrder) {
          if (unvisited(cur.x + d.x, cur.y + d.y)) cand.push_back({cur.x + d.x, cur.y + d.y});
        }
        if (cand.empty()) break;
        std::size_t pick = 0;
        if (br.path.size() >= 2) {
          const Pixel from = br.path[br.path.size() >= 5 ? br.path.size() - 5 : 0];
          const Point2 heading = cur.center() - from.center();
          double best_cos = -2.0;
          for (std::size_t k = 0; k < cand.size(); ++k) {
            const Point2 step = cand[k].center() - cur.center();
            const double c = dot(heading, step) / (heading.norm() * step.norm() + 1e-12);
            if (c > best_cos + 1e-12) {
              best_cos = c;
              pick = k;
            }
          }
        }
        for (std::size_t k = 0; k < cand.size(); ++k) {
          if (k != pick) sides.push_back({cur, cand[k], br.id, pb.depth + 1, false});
        }
        visited[skeleton.index(cand[pick].x, cand[pick].y)] = 1;
        br.path.push_back(cand[pick]);
      }
      br.depth.assign(br.path.size(), pb.depth);
      for (std::size_t i = pb.is_root ? 0 : 1; i < br.path.size(); ++i) {
        s.node_index[skeleton.index(br.path[i].x, br.path[i].y)] = br.id;
      }
      s.branches.push_back(std::move(br));
      for (auto it = sides.rbegin(); it != sides.rend(); ++it) stack.push_back(*it);
    }
  }
  return s;
}

namespace {

// Incremental union-of-strokes bookkeeping for IOU against a fixed target.
class StrokeCanvas {
 public:
  StrokeCanvas(const RasterMask& target) : target_(target), count_(target.size(), 0) {
    target_total_ = std::int64_t(target.count());
  }

  void add(const std::vector<std::size_t>& px) {
    auto t = target_.bits();
    for (auto i : px) {
      if (count_[i]++ == 0) {
        ++union_;
        if (t[i]) ++inter_;
      }
    }
  }
  void remove(const std::vector<std::size_t>& px) {
    auto t = target_.bits();
    for (auto i : px) {
      if (--count_[i] == 0) {
        --union_;
        if (t[i]) --inter_;
      }
    }
  }

  // Union counts target pixels too: |A | T| = |A| + |T| - |A & T|.
  std::int64_t inter() const { return inter_; }
  std::int64_t uni() const { return union_ + target_total_ - inter_; }
  double iou() const { return uni() == 0 ? 1.0 : double(inter()) / double(uni()); }

  // Pixels around the curve's control polygon where strokes and target disagree.
  std::int64_t mismatch_near(const BezierCurve& c) const {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const auto& p : c.control_points()) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    const double pad = c.width_start() + 2.0;
    const int ix0 = std::max(0, int(std::floor(x0 - pad))), iy0 = std::max(0, int(std::floor(y0 - pad)));
    const int ix1 = std::min(target_.width() - 1, int(std::ceil(x1 + pad)));
    const int iy1 = std::min(target_.height() - 1, int(std::ceil(y1 + pad)));
    auto t = target_.bits();
    std::int64_t n = 0;
    for (int y = iy0; y <= iy1; ++y) {
      for (int x = ix0; x <= ix1; ++x) {
        const std::size_t i = target_.index(x, y);
        n += (count_[i] > 0) != (t[i] != 0);
      }
    }
    return n;
  }

  RasterMask rendered() const {
    RasterMask m(target_.width(), target_.height());
    auto b = m.bits();
    for (std::size_t i = 0; i < count_.size(); ++i) b[i] = count_[i] > 0 ? 1 : 0;
    return m;
  }

 private:
  const RasterMask& target_;
  std::vector<std::uint32_t> count_;
  std::int64_t union_ = 0;  // pixels covered by any stroke
  std::int64_t inter_ = 0;
  std::int64_t target_total_ = 0;
};

bool better(std::int64_t inter_new, std::int64_t uni_new, std::int64_t inter_old, std::int64_t uni_old) {
  if (uni_new == 0 || uni_old == 0) return false;
  return inter_new * uni_old > inter_old * uni_new;
}

struct Coordinate {
  std::size_t curve;
  int point;  ///< interior control point index; -1 width_start, -2 width_end, -3 both
  int axis;   ///< 0 = x, 1 = y (control points only)
};

constexpr double kMinWidth = 0.3;
constexpr double kMinStep = 1.0 / 16.0;
constexpr double kPointStep = 1.0;
constexpr double kWidthStep = 0.5;
constexpr double kWidthOffset = 0.25;

// Nearest-skeleton assignment of target pixels. Every path pixel of a
// placed curve seeds an 8-connected BFS through the target carrying the
// curve index and the pixel's chord-length parameter on that curve.
struct Ownership {
  std::vector<int> curve;  ///< -1 where unowned
  std::vector<double> t;
};

Ownership assign_pixels(const RasterMask& target, const SkeletonRaster& skeleton,
                        const std::vector<CurvePlacement>& placements) {
  const int w = target.width(), h = target.height();
  Ownership own;
  own.curve.assign(target.size(), -1);
  own.t.assign(target.size(), 0.0);
  std::vector<std::size_t> queue;
  std::vector<double> cum;
  for (std::size_t k = 0; k < placements.size(); ++k) {
    const auto& pl = placements[k];
    const auto& path = skeleton.branches[std::size_t(pl.branch)].path;
    cum.assign(1, 0.0);
    for (std::size_t i = pl.start_index + 1; i <= pl.end_index; ++i) {
      cum.push_back(cum.back() + distance(path[i - 1].center(), path[i].center()));
    }
    for (std::size_t i = pl.start_index; i <= pl.end_index; ++i) {
      const std::size_t idx = target.index(path[i].x, path[i].y);
      if (own.curve[idx] != -1 || !target.bits()[idx]) continue;
      own.curve[idx] = int(k);
      own.t[idx] = cum.back() > 0.0 ? cum[i - pl.start_index] / cum.back() : 0.0;
      queue.push_back(idx);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t idx = queue[head];
    const int x = int(idx % std::size_t(w)), y = int(idx / std::size_t(w));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t n = target.index(nx, ny);
        if (own.curve[n] != -1 || !target.bits()[n]) continue;
        own.curve[n] = own.curve[idx];
        own.t[n] = own.t[idx];
        queue.push_back(n);
      }
    }
  }
  return own;
}

struct Sample {
  double t;
  Point2 p;
};

// Least-squares interior control points with fixed endpoints. Too few
// samples, or an ill-conditioned system, leave the curve unchanged.
void fit_interior_points(BezierCurve& curve, std::span<const Sample> samples) {
  const int n = curve.order();
  const int m = n - 1;
  if (samples.size() < std::size_t(2 * n)) return;
  std::array<double, 6> binom{};
  binom[0] = 1.0;
  for (int i = 1; i <= n; ++i) binom[std::size_t(i)] = binom[std::size_t(i - 1)] * double(n - i + 1) / double(i);
  std::array<std::array<double, 4>, 4> ata{};
  std::array<Point2, 4> atb{};
  std::array<double, 6> b{};
  const Point2 p0 = curve.front(), pn = curve.back();
  for (const Sample& sm : samples) {
    for (int i = 0; i <= n; ++i) {
      b[std::size_t(i)] = binom[std::size_t(i)] * std::pow(sm.t, i) * std::pow(1.0 - sm.t, n - i);
    }
    const Point2 r = sm.p - p0 * b[0] - pn * b[std::size_t(n)];
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) ata[std::size_t(i)][std::size_t(j)] += b[std::size_t(i + 1)] * b[std::size_t(j + 1)];
      atb[std::size_t(i)] = atb[std::size_t(i)] + r * b[std::size_t(i + 1)];
    }
  }
  // Gaussian elimination with partial pivoting on the m x m normal equations.
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r) {
      if (std::abs(ata[std::size_t(r)][std::size_t(c)]) > std::abs(ata[std::size_t(piv)][std::size_t(c)])) piv = r;
    }
    if (std::abs(ata[std::size_t(piv)][std::size_t(c)]) < 1e-9) return;
    std::swap(ata[std::size_t(c)], ata[std::size_t(piv)]);
    std::swap(atb[std::size_t(c)], atb[std::size_t(piv)]);
    for (int r = c + 1; r < m; ++r) {
      const double f = ata[std::size_t(r)][std::size_t(c)] / ata[std::size_t(c)][std::size_t(c)];
      for (int j = c; j < m; ++j) ata[std::size_t(r)][std::size_t(j)] -= f * ata[std::size_t(c)][std::size_t(j)];
      atb[std::size_t(r)] = atb[std::size_t(r)] - atb[std::size_t(c)] * f;
    }
  }
  std::array<Point2, 4> x{};
  for (int r = m - 1; r >= 0; --r) {
    Point2 acc = atb[std::size_t(r)];
    for (int j = r + 1; j < m; ++j) acc = acc - x[std::size_t(j)] * ata[std::size_t(r)][std::size_t(j)];
    x[std::size_t(r)] = acc * (1.0 / ata[std::size_t(r)][std::size_t(r)]);
  }
  for (int i = 0; i < m; ++i) {
    if (!x[std::size_t(i)].finite()) return;
  }
  for (int i = 0; i < m; ++i) curve.set_control_point(i + 1, x[std::size_t(i)]);
}

}  // namespace

FitReport refine(const RasterMask& target, std::vector<BezierCurve> curves, const FitParams& params) {
  params.validate();
  const int w = target.width(), h = target.height();
  StrokeCanvas canvas(target);
  std::vector<std::vector<std::size_t>> strokes;
  strokes.reserve(curves.size());
  for (const auto& c : curves) {
    strokes.push_back(stroke_pixels(c, w, h));
    canvas.add(strokes.back());
  }

  FitReport report;
  report.initial_iou = canvas.iou();
  report.iou_trajectory.push_back(report.initial_iou);

  // Per curve: interior point coordinates, then width_start, width_end and
  // both widths together.
  std::vector<std::vector<Coordinate>> coords(curves.size());
  std::vector<std::vector<double>> steps(curves.size());
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    for (int kind : {-1, -2, -3}) {
      coords[ci].push_back({ci, kind, 0});
      steps[ci].push_back(kWidthStep);
    }
    for (int p = 1; p < curves[ci].order(); ++p) {
      for (int axis = 0; axis < 2; ++axis) {
        coords[ci].push_back({ci, p, axis});
        steps[ci].push_back(kPointStep);
      }
    }
  }

  int evals = 0;
  std::vector<std::size_t> order(curves.size());
  std::vector<std::int64_t> error(curves.size());
  while (evals < params.budget) {
    const double sweep_start = canvas.iou();
    // Visit curves with the most mismatched pixels nearby first; curves
    // whose neighborhood already matches are skipped this sweep.
    for (std::size_t ci = 0; ci < curves.size(); ++ci) error[ci] = canvas.mismatch_near(curves[ci]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return error[a] > error[b]; });
    bool any_active = false;
    double largest_step = 0.0;
    for (std::size_t ci : order) {
      if (evals >= params.budget) break;
      if (error[ci] == 0) continue;
      for (std::size_t k = 0; k < coords[ci].size() && evals < params.budget; ++k) {
        double& step = steps[ci][k];
        if (step < kMinStep) continue;
        any_active = true;
        largest_step = std::max(largest_step, step);
        const Coordinate& c = coords[ci][k];
        BezierCurve& curve = curves[ci];
        const BezierCurve saved = curve;
        bool accepted = false;
        for (double sign : {1.0, -1.0}) {
          if (evals >= params.budget) break;
          BezierCurve trial = saved;
          if (c.point > 0) {
            // Axis 0 moves across the chord, axis 1 along it.
            const Point2 chord = saved.back() - saved.front();
            const double len = chord.norm();
            const Point2 along = len > 1e-9 ? chord * (1.0 / len) : Point2{1.0, 0.0};
            const Point2 dir = c.axis == 0 ? Point2{-along.y, along.x} : along;
            trial.set_control_point(c.point, trial.control_points()[std::size_t(c.point)] + dir * (sign * step));
          } else {
            double ws = trial.width_start(), we = trial.width_end();
            if (c.point != -2) ws += sign * step;
            if (c.point != -1) we += sign * step;
            if (we < kMinWidth || ws < we) continue;
            trial.set_widths(ws, we);
          }
          ++evals;
          const std::int64_t inter_old = canvas.inter(), uni_old = canvas.uni();
          auto px = stroke_pixels(trial, w, h);
          canvas.remove(strokes[ci]);
          canvas.add(px);
          if (better(canvas.inter(), canvas.uni(), inter_old, uni_old)) {
            curve = trial;
            strokes[ci] = std::move(px);
            report.iou_trajectory.push_back(canvas.iou());
            accepted = true;
            break;
          }
          canvas.remove(px);
          canvas.add(strokes[ci]);
        }
        if (!accepted) step *= 0.5;
      }
    }
    // A flat sweep only ends the search once no coarser step is left to try.
    if (!any_active || (canvas.iou() - sweep_start < params.min_gain && largest_step < 2.0 * kMinStep)) break;
  }

  report.iterations_used = evals;
  report.rendered = canvas.rendered();
  report.curves = std::move(curves);
  report.iou = iou(report.rendered, target);
  report.ssim = ssim(report.rendered, target);
  report.mse = mse(report.rendered, target);
  return report;
}

FitReport fit(const RasterMask& target, const FitParams& params) {
  params.validate();
  if (!target.any()) throw DomainError("fit target is empty");
  const RasterMask skel = skeletonize(target);
  const std::vector<double> dist = distance_transform(target);
  const SkeletonRaster skeleton = skeleton_from_mask(skel, dist);

  SynthesisParams sp;
  sp.curve_order = params.curve_order;
  sp.coverage_threshold = params.coverage_target;
  sp.min_half_width = 0.5;
  sp.seed = params.seed;
  sp.max_curves = std::max<int>(1, int(skel.count()));
  sp.hop_min = params.hop_min;
  sp.hop_max = params.hop_max;
  // The nearest background pixel lies just beyond the stroke edge, so the
  // distance at a centerline pixel overshoots the half-width.
  auto width = [&](int branch, std::size_t index) {
    const auto& path = skeleton.branches[std::size_t(branch)].path;
    std::array<double, 5> window{};
    std::size_t n = 0;
    for (std::ptrdiff_t k = -2; k <= 2; ++k) {
      const std::ptrdiff_t j = std::ptrdiff_t(index) + k;
      if (j < 0 || j >= std::ptrdiff_t(path.size())) continue;
      window[n++] = dist[target.index(path[std::size_t(j)].x, path[std::size_t(j)].y)];
    }
    std::sort(window.begin(), window.begin() + std::ptrdiff_t(n));
    return std::max(sp.min_half_width, window[n / 2] - kWidthOffset);
  };
  // Curves follow their skeleton run during placement, then the interior
  // points are refit to the target pixels each curve owns.
  std::vector<Sample> run;
  auto shape = [&](BezierCurve& curve, const CurvePlacement& pl) {
    const auto& path = skeleton.branches[std::size_t(pl.branch)].path;
    run.clear();
    double len = 0.0;
    Point2 prev = curve.front();
    for (std::size_t i = pl.start_index; i <= pl.end_index; ++i) {
      const Point2 q = i == pl.start_index ? curve.front() : i == pl.end_index ? curve.back() : path[i].center();
      len += distance(prev, q);
      run.push_back({len, q});
      prev = q;
    }
    if (len <= 0.0) return;
    for (auto& sm : run) sm.t /= len;
    fit_interior_points(curve, run);
  };
  SynthesisResult placed = synthesize_mask(skeleton, sp, width, shape);
  const Ownership own = assign_pixels(target, skeleton, placed.placements);
  std::vector<std::vector<Sample>> samples(placed.curves.size());
  for (std::size_t i = 0; i < own.curve.size(); ++i) {
    if (own.curve[i] < 0) continue;
    samples[std::size_t(own.curve[i])].push_back(
        {own.t[i], Pixel{int(i % std::size_t(target.width())), int(i / std::size_t(target.width()))}.center()});
  }
  for (std::size_t k = 0; k < placed.curves.size(); ++k) fit_interior_points(placed.curves[k], samples[k]);
  return refine(target, std::move(placed.curves), params);
}

std::string order_label(int order) {
  switch (order) {
    case 3: return "CB";
    case 4: return "QB";
    case 5: return "QB5";
    default: throw DomainError("unsupported Bezier order " + std::to_string(order));
  }
}

std::vector<OrderRow> compare_orders(const std::vector<RasterMask>& targets, const std::vector<int>& orders,
                                     const FitParams& params, int workers) {
  if (orders.empty()) throw DomainError("no curve orders requested");
  if (targets.empty()) throw DomainError("no targets to fit");
  for (int o : orders) order_label(o);
  params.validate();

  const std::size_t jobs = targets.size() * orders.size();
  std::vector<FitReport> reports(jobs);
  parallel_for(jobs, workers, [&](std::size_t j) {
    FitParams p = params;
    p.curve_order = orders[j / targets.size()];
    reports[j] = fit(targets[j % targets.size()], p);
  });

  std::vector<OrderRow> rows;
  for (std::size_t oi = 0; oi < orders.size(); ++oi) {
    OrderRow row;
    row.order = orders[oi];
    row.method = order_label(orders[oi]);
    row.samples = targets.size();
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      const FitReport& r = reports[oi * targets.size() + ti];
      row.iou += r.iou;
      row.ssim += r.ssim;
      row.mse += r.mse;
    }
    row.iou /= double(targets.size());
    row.ssim /= double(targets.size());
    row.mse /= double(targets.size());
    rows.push_back(row);
  }
  return rows;
}

std::string order_table_csv(const std::vector<OrderRow>& rows) {
  std::string out = "method,order,iou,ssim,mse\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f\n", r.method.c_str(), r.order, r.iou, r.ssim, r.mse);
    out += buf;
  }
  return out;
}

}  // namespace vsynth
