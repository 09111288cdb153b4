#include "vesselsynth/skeleton_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>

#include "vesselsynth/errors.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/rng.hpp"

namespace vsynth {

SkeletonParams SkeletonParams::for_canvas(int width, int height) {
  SkeletonParams p;
  p.canvas_width = width;
  p.canvas_height = height;
  p.root_position = {std::floor(width / 2.0), std::round(height * 0.05)};
  p.root_length = std::round(height * 0.28);
  return p;
}

void SkeletonParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (omega < 0 || omega > 10) throw DomainError("omega must be in [0, 10]");
  if (theta_branches < 1) throw DomainError("theta_branches must be >= 1");
  if (!root_position.finite() || !finite(root_heading) || !finite(root_length) ||
      !finite(length_decay) || !finite(length_jitter) || !finite(branch_angle_spread) ||
      !finite(canvas_margin)) {
    throw DomainError("skeleton parameters must be finite");
  }
  if (!(length_decay > 0.0 && length_decay < 1.0)) throw DomainError("length_decay must be in (0, 1)");
  if (!(length_jitter >= 0.0 && length_jitter < 1.0)) throw DomainError("length_jitter must be in [0, 1)");
  if (!(root_length > 0.0)) throw DomainError("root_length must be positive");
  if (branch_angle_spread < 0.0) throw DomainError("branch_angle_spread must be >= 0");
  if (canvas_width < 8 || canvas_height < 8) throw DomainError("canvas must be at least 8x8");
  if (canvas_margin < 0.0 || 2.0 * canvas_margin >= std::min(canvas_width, canvas_height) - 1) {
    throw DomainError("canvas_margin too large for canvas");
  }
}

namespace {

struct ClipBox {
  double lo_x, lo_y, hi_x, hi_y;

  bool contains(Point2 p) const { return p.x >= lo_x && p.x <= hi_x && p.y >= lo_y && p.y <= hi_y; }

  /// Largest s in [0, length] keeping start + dir * s inside the box.
  double clip(Point2 start, Point2 dir, double length) const {
    double s = length;
    auto limit = [&](double p, double d, double lo, double hi) {
      if (d > 0.0) s = std::min(s, (hi - p) / d);
      if (d < 0.0) s = std::min(s, (lo - p) / d);
    };
    limit(start.x, dir.x, lo_x, hi_x);
    limit(start.y, dir.y, lo_y, hi_y);
    return std::max(0.0, s);
  }
};

Point2 heading_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

class TreeBuilder {
 public:
  TreeBuilder(const SkeletonParams& p, ClipBox box) : params_(p), box_(box) {}

  // Returns false when the segment is clipped away entirely.
  bool grow(SkeletonNode& node, KeyedRng rng, double heading, double nominal_length) {
    node.direction = heading_vector(heading);
    const double clipped = box_.clip(node.position, node.direction, nominal_length);
    const bool was_clipped = clipped < nominal_length;
    node.length = clipped;
    if (node.depth > 0 && clipped < 1.0) return false;
    if (was_clipped || node.depth >= params_.omega) return true;
    for (int k = 0; k < params_.theta_branches; ++k) {
      KeyedRng child_rng = rng.child(std::uint64_t(k));
      KeyedRng draw = child_rng;
      const double factor = draw.uniform(1.0 - params_.length_jitter, 1.0 + params_.length_jitter);
      const double offset = draw.uniform(-params_.branch_angle_spread, params_.branch_angle_spread);
      SkeletonNode child;
      child.position = node.end();
      child.depth = node.depth + 1;
      if (grow(child, child_rng, heading + offset, nominal_length * params_.length_decay * factor)) {
        node.children.push_back(std::move(child));
      }
    }
    return true;
  }

 private:
  const SkeletonParams& params_;
  ClipBox box_;
};

void assign_ids(SkeletonNode& node, int& next) {
  node.id = next++;
  for (auto& c : node.children) assign_ids(c, next);
}

}  // namespace

SkeletonNode generate_skeleton(const SkeletonParams& params) {
  params.validate();
  const double m = params.canvas_margin;
  ClipBox box{m, m, params.canvas_width - 1 - m, params.canvas_height - 1 - m};
  if (!box.contains(params.root_position)) {
    throw DomainError("root position lies outside the canvas");
  }
  SkeletonNode root;
  root.position = params.root_position;
  root.depth = 0;
  TreeBuilder builder(params, box);
  builder.grow(root, KeyedRng(mix64(params.seed)), params.root_heading, params.root_length);
  int next = 0;
  assign_ids(root, next);
  return root;
}

std::size_t count_nodes(const SkeletonNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += count_nodes(c);
  return n;
}

int max_depth(const SkeletonNode& root) {
  int d = root.depth;
  for (const auto& c : root.children) d = std::max(d, max_depth(c));
  return d;
}

std::vector<const SkeletonNode*> flatten_tree(const SkeletonNode& root) {
  std::vector<const SkeletonNode*> out;
  std::function<void(const SkeletonNode&)> walk = [&](const SkeletonNode& n) {
    out.push_back(&n);
    for (const auto& c : n.children) walk(c);
  };
  walk(root);
  return out;
}

std::vector<Pixel> bresenham(Pixel a, Pixel b) {
  std::vector<Pixel> out;
  int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
  int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Pixel p = a;
  while (true) {
    out.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      p.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      p.y += sy;
    }
  }
  return out;
}

namespace {

std::vector<Pixel> segment_pixels(const SkeletonNode& n, int width, int height) {
  auto line = bresenham(round_to_pixel(n.position), round_to_pixel(n.end()));
  std::erase_if(line, [&](Pixel p) { return p.x < 0 || p.y < 0 || p.x >= width || p.y >= height; });
  return line;
}

void emit_vessel(const SkeletonNode& start, int parent, int width, int height,
                 std::vector<SkeletonBranch>& out) {
  const int id = int(out.size());
  out.push_back({});
  SkeletonBranch branch;
  branch.id = id;
  branch.parent = parent;
  std::vector<const SkeletonNode*> chain;
  for (const SkeletonNode* n = &start;; n = &n->children.front()) {
    chain.push_back(n);
    auto px = segment_pixels(*n, width, height);
    for (const auto& p : px) {
      if (!branch.path.empty() && branch.path.back() == p) continue;
      branch.path.push_back(p);
      branch.depth.push_back(n->depth);
    }
    if (n->children.empty()) break;
  }
  out[std::size_t(id)] = std::move(branch);
  for (const SkeletonNode* n : chain) {
    for (std::size_t k = 1; k < n->children.size(); ++k) {
      emit_vessel(n->children[k], id, width, height, out);
    }
  }
}

}  // namespace

SkeletonRaster rasterize_skeleton(const SkeletonNode& root, int width, int height) {
  SkeletonRaster s;
  s.mask = RasterMask(width, height);
  s.node_index.assign(s.mask.size(), -1);
  for (const SkeletonNode* n : flatten_tree(root)) {
    for (const auto& p : segment_pixels(*n, width, height)) {
      const auto i = s.mask.index(p.x, p.y);
      if (s.node_index[i] < 0) s.node_index[i] = n->id;
      s.mask.set(p);
    }
  }
  emit_vessel(root, -1, width, height, s.branches);
  return s;
}

namespace {

std::size_t component_count(const RasterMask& m) { return connected_components(m, 8).components.size(); }

// New foreground pixels inherit the owner of the nearest labelled pixel
// (breadth-first, 8-neighborhood).
void propagate_owners(const RasterMask& mask, std::vector<int>& owner) {
  std::deque<Pixel> queue;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) && owner[mask.index(x, y)] >= 0) queue.push_back({x, y});
    }
  }
  while (!queue.empty()) {
    Pixel p = queue.front();
    queue.pop_front();
    const int o = owner[mask.index(p.x, p.y)];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = p.x + dx, ny = p.y + dy;
        if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) continue;
        int& t = owner[mask.index(nx, ny)];
        if (t < 0) {
          t = o;
          queue.push_back({nx, ny});
        }
      }
    }
  }
}

}  // namespace

CloseResult close_skeleton(const SkeletonRaster& skeleton, int max_iterations) {
  CloseResult r;
  r.skeleton = skeleton;
  if (!skeleton.mask.any()) return r;
  if (component_count(skeleton.mask) == 1) {
    r.connected = true;
    return r;
  }
  RasterMask s = skeleton.mask;
  while (r.iterations < max_iterations) {
    ++r.iterations;
    const RasterMask d = dilate(s, 2);
    const RasterMask t = erode(d, 1);
    s = bitwise_or(s, t);
    if (component_count(s) == 1) {
      r.connected = true;
      break;
    }
  }
  r.skeleton.mask = s;
  propagate_owners(s, r.skeleton.node_index);
  return r;
}

}  // namespace vsynth
