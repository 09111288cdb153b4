#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "vesselsynth/bezier.hpp"
#include "vesselsynth/raster.hpp"
#include "vesselsynth/rng.hpp"
#include "vesselsynth/skeleton_tree.hpp"

namespace vsynth {

struct SynthesisParams {
  int curve_order = 3;
  double coverage_threshold = 0.95;
  int max_curves = 2000;
  double width_root = 4.0;        ///< half-width of the root vessel (px)
  double width_decay = 0.8;       ///< half-width factor per tree level
  double min_half_width = 1.0;
  double angle_tolerance = 0.2;   ///< alpha: accept a curve once its fit angle drops below this
  int orientation_window = 3;     ///< Sobel patch is (2w+1)^2
  int hop_min = 8;                ///< curve end lies this many path pixels ahead, at least...
  int hop_max = 40;               ///< ...and at most
  int max_descent_iterations = 64;
  std::uint64_t seed = 0;

  void validate() const;
  double half_width_at_depth(int depth) const;
};

/// Structure-tensor sums of the skeleton's Sobel field with summed-area
/// tables, so the ridge direction of any patch costs O(1).
class OrientationField {
 public:
  OrientationField(const RasterMask& skeleton, int window);

  int window() const { return window_; }
  /// Ridge angle in (-pi/2, pi/2], or nullopt when the patch holds no
  /// skeleton pixel.
  std::optional<double> try_orientation(Pixel p) const;
  /// Throws NoSignalError on an empty patch.
  double orientation(Point2 p) const;

 private:
  double box_sum(const std::vector<double>& table, int x0, int y0, int x1, int y1) const;

  int width_;
  int height_;
  int window_;
  std::vector<double> jxx_, jyy_, jxy_, count_;
};

/// Dominant ridge direction of the skeleton around `p`, in (-pi/2, pi/2].
/// Gradients are averaged as a structure tensor (doubled angles) because the
/// two flanks of a thin ridge carry opposite gradients.
double local_orientation(const SkeletonRaster& skeleton, Point2 p, int window);

/// Unsigned angle between a direction and an axis, in [0, pi/2].
double axial_deviation(double direction, double axis);

/// Mean axial deviation between the curve's tangent and the skeleton ridge,
/// sampled at 16 parameter values. Samples without ridge signal count as pi/2.
double alignment_error(const BezierCurve& curve, const OrientationField& field);

/// Half-width (px) assigned to a branch pixel.
using WidthFn = std::function<double(int branch, std::size_t index)>;

struct CurvePlacement {
  int branch = 0;
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  int depth = 0;
  double theta_initial = 0.0;  ///< alignment error of the chord initialization
  double theta_fit = 0.0;      ///< after interior-point descent
};

struct PlacedCurve {
  BezierCurve curve;
  CurvePlacement placement;
};

/// Anchor a curve at path[start_index] of `branch`, end it 8..40 path pixels
/// further along, and descend the interior control points on the alignment
/// error. Throws BranchExhausted when start_index is the branch's last pixel.
/// `anchor` replaces the first control point (used to attach a side vessel
/// to its parent's stroke); `last_index` caps the end index.
PlacedCurve place_curve(const SkeletonRaster& skeleton, const OrientationField& field, int branch,
                        std::size_t start_index, const SynthesisParams& params, KeyedRng& rng,
                        const WidthFn& half_width, std::optional<Point2> anchor = std::nullopt,
                        std::optional<std::size_t> last_index = std::nullopt);

/// Convenience form: locates `start` on the skeleton's branches and uses
/// depth-based widths.
BezierCurve place_curve(const SkeletonRaster& skeleton, Point2 start, const SynthesisParams& params,
                        KeyedRng& rng);

struct SynthesisResult {
  RasterMask mask;
  std::vector<BezierCurve> curves;
  std::vector<CurvePlacement> placements;
  /// Covered skeleton fraction after each curve was added.
  std::vector<double> coverage_history;
  double coverage = 0.0;
  bool coverage_warning = false;
  nlohmann::json manifest;
};

/// Adjusts a freshly placed curve before it is stamped.
using CurveShaper = std::function<void(BezierCurve&, const CurvePlacement&)>;

/// Chain curves along every branch, then patch remaining uncovered runs of
/// skeleton pixels, until the coverage threshold is met.
/// `width` overrides the depth-based width profile when set.
SynthesisResult synthesize_mask(const SkeletonRaster& skeleton, const SynthesisParams& params,
                                const WidthFn& width = {}, const CurveShaper& shape = {});

/// Skeleton generation, rasterization, gap closing and synthesis in one run.
SynthesisResult generate_sample(const SkeletonParams& skel_params, const SynthesisParams& synth_params);

}  // namespace vsynth
