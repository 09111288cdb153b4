#pragma once

#include <string>

#include "vesselsynth/raster.hpp"

namespace vsynth {

struct MetricSet {
  double iou = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  double cr_literal = 0.0;
  double cr_connected = 0.0;
  double s_smooth = 0.0;
};

/// |a & b| / |a | b|; 1 when both masks are empty.
double iou(const RasterMask& a, const RasterMask& b);

/// Mean squared difference of images normalized to [0, 1].
double mse(const GrayImage& a, const GrayImage& b);
/// Masks as 0/1 images: the fraction of differing pixels.
double mse(const RasterMask& a, const RasterMask& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Mean local SSIM with a Gaussian window; borders are handled by
/// half-sample symmetric reflection so every pixel contributes.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});
/// Masks are compared as 0/255 images.
double ssim(const RasterMask& a, const RasterMask& b);

struct ConnectivityRatio {
  double literal = 0.0;    ///< |skeleton| / |foreground|
  double connected = 0.0;  ///< |largest skeleton component| / |skeleton|
};

ConnectivityRatio connectivity_ratio(const RasterMask& mask);

/// Mean absolute boundary curvature over contours longer than 12 pixels.
///
/// Each traced contour is smoothed with a circular 5-point moving average;
/// the second derivative uses a +-4 sample central stencil and is scaled to
/// arc length by the contour's median step length.
double edge_smoothness(const RasterMask& mask);

/// All six scores; CR and smoothness are computed on `pred`.
MetricSet evaluate_pair(const RasterMask& pred, const RasterMask& gt);

/// `sample_id,iou,ssim,mse,cr_literal,cr_connected,s_smooth`
std::string metric_csv_header();
std::string metric_csv_row(const std::string& sample_id, const MetricSet& m);

}  // namespace vsynth
