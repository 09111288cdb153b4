#pragma once

#include <vector>

#include "vesselsynth/geometry.hpp"
#include "vesselsynth/raster.hpp"

namespace vsynth {

/// Binary erosion with a disk of the given radius. Pixels outside the canvas
/// count as background.
RasterMask erode(const RasterMask& mask, int radius);
/// Binary dilation with a disk of the given radius.
RasterMask dilate(const RasterMask& mask, int radius);

/// Offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
std::vector<Pixel> disk_offsets(int radius);

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<double> magnitude;
  /// atan2(gy, gx), folded into (-pi, pi].
  std::vector<double> angle;
};

/// 3x3 Sobel responses with edge replication. Mask input uses 0/1 levels.
GradientField sobel(const GrayImage& image);
GradientField sobel(const RasterMask& mask);

/// Zhang-Suen thinning run to a fixpoint. Deletions marked in each
/// sub-iteration are re-validated against the partially thinned image before
/// they are applied, so no component is disconnected or removed.
RasterMask skeletonize(const RasterMask& mask);

struct CannyParams {
  double sigma = 1.0;
  int kernel_size = 5;
  double low_ratio = 0.1;
  double high_ratio = 0.3;
};

RasterMask canny_edges(const RasterMask& mask, const CannyParams& params = {});

struct Component {
  int label = 0;  ///< 1-based, in order of first scanned pixel
  std::size_t size = 0;
  Pixel first;
};

struct ComponentMap {
  std::vector<int> labels;  ///< 0 = background
  std::vector<Component> components;
};

/// Connectivity is 4 or 8.
ComponentMap connected_components(const RasterMask& mask, int connectivity = 8);

/// Outer boundary of every 8-connected component, traced clockwise (in image
/// coordinates) by Moore-neighbor tracing. Each contour is a closed loop whose
/// first pixel is not repeated at the end.
std::vector<std::vector<Pixel>> boundary_trace(const RasterMask& mask);

/// Euclidean distance from each foreground pixel to the nearest background
/// pixel (outside the canvas counts as background). Background pixels are 0.
std::vector<double> distance_transform(const RasterMask& mask);

}  // namespace vsynth
