#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vesselsynth/bezier.hpp"
#include "vesselsynth/raster.hpp"
#include "vesselsynth/skeleton_tree.hpp"

namespace vsynth {

struct FitParams {
  int curve_order = 3;
  int budget = 2000;              ///< maximum IOU evaluations during refinement
  double coverage_target = 0.99;  ///< skeleton coverage for the placement pass
  std::uint64_t seed = 0;
  double min_gain = 1e-4;         ///< stop once a full sweep at the finest step gains less IOU than this
  int hop_min = 8;                ///< placement hop range along the target skeleton
  int hop_max = 16;

  void validate() const;
};

struct FitReport {
  std::vector<BezierCurve> curves;
  RasterMask rendered;
  double iou = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  int iterations_used = 0;
  double initial_iou = 0.0;
  /// IOU after the placement pass followed by the IOU at every accepted step.
  std::vector<double> iou_trajectory;

  bool operator==(const FitReport&) const = default;
};

/// Union of the curves' strokes.
RasterMask render_curves(std::span<const BezierCurve> curves, int width, int height);

/// Decompose a thinned mask into branches. Each 8-connected component is
/// walked depth-first from its highest-priority pixel; at junctions the walk
/// continues along the neighbor best aligned with the current heading and the
/// remaining neighbors open side branches. `node_index` holds branch ids.
SkeletonRaster skeleton_from_mask(const RasterMask& skeleton, std::span<const double> priority);

/// Fit curves to an annotated mask: thin it, estimate widths from the
/// distance transform, place curves along the skeleton, then refine.
FitReport fit(const RasterMask& target, const FitParams& params);

/// Greedy coordinate ascent on IOU over every curve's interior control
/// points and widths. Curve endpoints stay fixed. The result never scores
/// below the starting curves.
FitReport refine(const RasterMask& target, std::vector<BezierCurve> curves, const FitParams& params);

struct OrderRow {
  int order = 3;
  std::string method;  ///< CB, QB, QB5
  std::size_t samples = 0;
  double iou = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
};

std::string order_label(int order);

/// Fit every target at every order; one row of mean scores per order.
/// Pairs run on `workers` threads; results do not depend on the count.
std::vector<OrderRow> compare_orders(const std::vector<RasterMask>& targets, const std::vector<int>& orders,
                                     const FitParams& params, int workers = 1);

/// `method,order,iou,ssim,mse`, 6-decimal fixed point.
std::string order_table_csv(const std::vector<OrderRow>& rows);

}  // namespace vsynth
