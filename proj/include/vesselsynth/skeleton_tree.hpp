#pragma once

#include <cstdint>
#include <vector>

#include "vesselsynth/geometry.hpp"
#include "vesselsynth/raster.hpp"

namespace vsynth {

/// One vessel segment. The segment runs from `position` along `direction`
/// for `length` pixels; children start at its far end.
struct SkeletonNode {
  int id = 0;  ///< preorder index
  Point2 position;
  Point2 direction{1.0, 0.0};
  double length = 0.0;
  int depth = 0;
  std::vector<SkeletonNode> children;

  Point2 end() const { return position + direction * length; }
};

struct SkeletonParams {
  int omega = 5;           ///< maximum depth
  int theta_branches = 2;  ///< children per bifurcation
  Point2 root_position{256.0, 24.0};
  double root_heading = 1.5707963267948966;  ///< radians, image coordinates (y down)
  double root_length = 144.0;
  double length_decay = 0.75;
  double length_jitter = 0.2;        ///< child length factor drawn from U(1 - j, 1 + j)
  double branch_angle_spread = 0.7;  ///< child heading offset drawn from U(-spread, spread)
  double canvas_margin = 4.0;        ///< segments are clipped to the canvas shrunk by this
  int canvas_width = 512;
  int canvas_height = 512;
  std::uint64_t seed = 0;

  /// Defaults scaled to a canvas: root near the top edge, heading down.
  static SkeletonParams for_canvas(int width, int height);
  void validate() const;
};

SkeletonNode generate_skeleton(const SkeletonParams& params);

std::size_t count_nodes(const SkeletonNode& root);
int max_depth(const SkeletonNode& root);
/// Nodes in preorder (index == id).
std::vector<const SkeletonNode*> flatten_tree(const SkeletonNode& root);

/// Ordered skeleton pixels forming one vessel. Consecutive pixels are
/// 8-adjacent. `depth[i]` is the tree depth owning `path[i]`.
struct SkeletonBranch {
  int id = 0;
  int parent = -1;
  std::vector<Pixel> path;
  std::vector<int> depth;
};

struct SkeletonRaster {
  RasterMask mask;
  /// Owning node (or branch, for skeletons extracted from masks) per pixel; -1 off-skeleton.
  std::vector<int> node_index;
  /// Vessels in root-to-leaves depth-first order. A vessel follows first
  /// children down to a leaf; every other child opens a new vessel that
  /// starts on its parent's junction pixel.
  std::vector<SkeletonBranch> branches;
};

/// Pixels of the 8-connected Bresenham line from a to b, inclusive.
std::vector<Pixel> bresenham(Pixel a, Pixel b);

SkeletonRaster rasterize_skeleton(const SkeletonNode& root, int width, int height);

struct CloseResult {
  SkeletonRaster skeleton;
  int iterations = 0;
  bool connected = false;  ///< false when the iteration cap fired first
};

/// Gap bridging on the skeleton raster: repeat D <- dilate(S, 2),
/// T <- erode(D, 1), S <- S | T until S is one 8-connected component or
/// `max_iterations` passes have run. Already-connected input is returned
/// unchanged.
CloseResult close_skeleton(const SkeletonRaster& skeleton, int max_iterations = 16);

}  // namespace vsynth
