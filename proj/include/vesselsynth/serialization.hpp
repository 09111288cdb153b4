#pragma once

#include "json.hpp"
#include "vesselsynth/bezier.hpp"
#include "vesselsynth/mask_fitting.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/skeleton_tree.hpp"

namespace vsynth {

// JSON round trips. Parsers throw ParseError on missing or mistyped fields;
// value checks are left to the types' own validation.

nlohmann::json to_json(Point2 p);
Point2 point_from_json(const nlohmann::json& j);

/// {"order", "control_points": [[x, y], ...], "width_start", "width_end"}
nlohmann::json to_json(const BezierCurve& curve);
BezierCurve curve_from_json(const nlohmann::json& j);

/// Nested tree with children.
nlohmann::json to_json(const SkeletonNode& node);
SkeletonNode skeleton_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SkeletonParams& p);
/// Missing keys keep their defaults.
SkeletonParams skeleton_params_from_json(const nlohmann::json& j, SkeletonParams base = {});

nlohmann::json to_json(const SynthesisParams& p);
SynthesisParams synthesis_params_from_json(const nlohmann::json& j, SynthesisParams base = {});

nlohmann::json to_json(const FitParams& p);
FitParams fit_params_from_json(const nlohmann::json& j, FitParams base = {});

/// Curves plus canvas size and scores; the rendered mask is not stored.
nlohmann::json to_json(const FitReport& r);
/// Rebuilds `rendered` from the curves on the stored canvas.
FitReport fit_report_from_json(const nlohmann::json& j);

}  // namespace vsynth
