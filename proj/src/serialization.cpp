#include "vesselsynth/serialization.hpp"

#include "vesselsynth/errors.hpp"

namespace vsynth {

using nlohmann::json;

namespace {

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (j.contains(key)) out = get_field<T>(j, key);
}

}  // namespace

json to_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError("point must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const BezierCurve& curve) {
  json pts = json::array();
  for (const auto& p : curve.control_points()) pts.push_back(to_json(p));
  return {{"order", curve.order()},
          {"control_points", pts},
          {"width_start", curve.width_start()},
          {"width_end", curve.width_end()}};
}

BezierCurve curve_from_json(const json& j) {
  const json pts = get_field<json>(j, "control_points");
  if (!pts.is_array()) throw ParseError("control_points must be an array");
  std::vector<Point2> points;
  for (const auto& p : pts) points.push_back(point_from_json(p));
  if (j.contains("order") && get_field<int>(j, "order") != int(points.size()) - 1) {
    throw ParseError("order does not match the number of control points");
  }
  return BezierCurve(std::move(points), get_field<double>(j, "width_start"), get_field<double>(j, "width_end"));
}

json to_json(const SkeletonNode& node) {
  json children = json::array();
  for (const auto& c : node.children) children.push_back(to_json(c));
  return {{"id", node.id},
          {"position", to_json(node.position)},
          {"direction", to_json(node.direction)},
          {"length", node.length},
          {"depth", node.depth},
          {"children", children}};
}

SkeletonNode skeleton_from_json(const json& j) {
  SkeletonNode n;
  n.id = get_field<int>(j, "id");
  n.position = point_from_json(get_field<json>(j, "position"));
  n.direction = point_from_json(get_field<json>(j, "direction"));
  n.length = get_field<double>(j, "length");
  n.depth = get_field<int>(j, "depth");
  for (const auto& c : get_field<json>(j, "children")) n.children.push_back(skeleton_from_json(c));
  return n;
}

json to_json(const SkeletonParams& p) {
  return {{"omega", p.omega},
          {"theta_branches", p.theta_branches},
          {"root_position", to_json(p.root_position)},
          {"root_heading", p.root_heading},
          {"root_length", p.root_length},
          {"length_decay", p.length_decay},
          {"length_jitter", p.length_jitter},
          {"branch_angle_spread", p.branch_angle_spread},
          {"canvas_margin", p.canvas_margin},
          {"canvas_width", p.canvas_width},
          {"canvas_height", p.canvas_height},
          {"seed", p.seed}};
}

SkeletonParams skeleton_params_from_json(const json& j, SkeletonParams p) {
  read_opt(j, "omega", p.omega);
  read_opt(j, "theta_branches", p.theta_branches);
  if (j.contains("root_position")) p.root_position = point_from_json(j["root_position"]);
  read_opt(j, "root_heading", p.root_heading);
  read_opt(j, "root_length", p.root_length);
  read_opt(j, "length_decay", p.length_decay);
  read_opt(j, "length_jitter", p.length_jitter);
  read_opt(j, "branch_angle_spread", p.branch_angle_spread);
  read_opt(j, "canvas_margin", p.canvas_margin);
  read_opt(j, "canvas_width", p.canvas_width);
  read_opt(j, "canvas_height", p.canvas_height);
  read_opt(j, "seed", p.seed);
  return p;
}

json to_json(const SynthesisParams& p) {
  return {{"curve_order", p.curve_order},
          {"coverage_threshold", p.coverage_threshold},
          {"max_curves", p.max_curves},
          {"width_root", p.width_root},
          {"width_decay", p.width_decay},
          {"min_half_width", p.min_half_width},
          {"angle_tolerance", p.angle_tolerance},
          {"orientation_window", p.orientation_window},
          {"hop_min", p.hop_min},
          {"hop_max", p.hop_max},
          {"max_descent_iterations", p.max_descent_iterations},
          {"seed", p.seed}};
}

SynthesisParams synthesis_params_from_json(const json& j, SynthesisParams p) {
  read_opt(j, "curve_order", p.curve_order);
  read_opt(j, "coverage_threshold", p.coverage_threshold);
  read_opt(j, "max_curves", p.max_curves);
  read_opt(j, "width_root", p.width_root);
  read_opt(j, "width_decay", p.width_decay);
  read_opt(j, "min_half_width", p.min_half_width);
  read_opt(j, "angle_tolerance", p.angle_tolerance);
  read_opt(j, "orientation_window", p.orientation_window);
  read_opt(j, "hop_min", p.hop_min);
  read_opt(j, "hop_max", p.hop_max);
  read_opt(j, "max_descent_iterations", p.max_descent_iterations);
  read_opt(j, "seed", p.seed);
  return p;
}

json to_json(const FitParams& p) {
  return {{"curve_order", p.curve_order},
          {"budget", p.budget},
          {"coverage_target", p.coverage_target},
          {"seed", p.seed},
          {"min_gain", p.min_gain},
          {"hop_min", p.hop_min},
          {"hop_max", p.hop_max}};
}

FitParams fit_params_from_json(const json& j, FitParams p) {
  read_opt(j, "curve_order", p.curve_order);
  read_opt(j, "budget", p.budget);
  read_opt(j, "coverage_target", p.coverage_target);
  read_opt(j, "seed", p.seed);
  read_opt(j, "min_gain", p.min_gain);
  read_opt(j, "hop_min", p.hop_min);
  read_opt(j, "hop_max", p.hop_max);
  return p;
}

json to_json(const FitReport& r) {
  json curves = json::array();
  for (const auto& c : r.curves) curves.push_back(to_json(c));
  return {{"width", r.rendered.width()},
          {"height", r.rendered.height()},
          {"curves", curves},
          {"iou", r.iou},
          {"ssim", r.ssim},
          {"mse", r.mse},
          {"iterations_used", r.iterations_used},
          {"initial_iou", r.initial_iou},
          {"iou_trajectory", r.iou_trajectory}};
}

FitReport fit_report_from_json(const json& j) {
  FitReport r;
  const int w = get_field<int>(j, "width");
  const int h = get_field<int>(j, "height");
  if (w <= 0 || h <= 0) throw ParseError("canvas size must be positive");
  for (const auto& c : get_field<json>(j, "curves")) r.curves.push_back(curve_from_json(c));
  r.rendered = render_curves(r.curves, w, h);
  r.iou = get_field<double>(j, "iou");
  r.ssim = get_field<double>(j, "ssim");
  r.mse = get_field<double>(j, "mse");
  r.iterations_used = get_field<int>(j, "iterations_used");
  r.initial_iou = get_field<double>(j, "initial_iou");
  r.iou_trajectory = get_field<std::vector<double>>(j, "iou_trajectory");
  return r;
}

}  // namespace vsynth
