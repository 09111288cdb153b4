#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vesselsynth/commands.hpp"
#include "vesselsynth/diffusion.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/mask_fitting.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/serialization.hpp"
#include "vesselsynth/vessel_metrics.hpp"

namespace py = pybind11;
using namespace vsynth;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

RasterMask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw ShapeError("mask must be a 2-D array");
  RasterMask m(int(a.shape(1)), int(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t y = 0; y < a.shape(0); ++y)
    for (py::ssize_t x = 0; x < a.shape(1); ++x) m.set(int(x), int(y), r(y, x) != 0);
  return m;
}

py::array_t<std::uint8_t> to_array(const RasterMask& m) {
  py::array_t<std::uint8_t> a({py::ssize_t(m.height()), py::ssize_t(m.width())});
  std::copy(m.bits().begin(), m.bits().end(), a.mutable_data());
  return a;
}

// JSON crosses the boundary as text; the Python side parses it with json.loads.
py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

BezierCurve make_curve(const std::vector<std::pair<double, double>>& pts, double w0, double w1) {
  std::vector<Point2> p;
  for (auto [x, y] : pts) p.push_back({x, y});
  return BezierCurve(p, w0, w1);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Procedural vessel masks: synthesis, fitting and scoring";
  m.attr("__version__") = VESSELSYNTH_VERSION;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "generate_sample",
      [](int size, int depth, int branches, int order, std::uint64_t seed) {
        SkeletonParams sp = SkeletonParams::for_canvas(size, size);
        sp.omega = depth;
        sp.theta_branches = branches;
        sp.seed = seed;
        SynthesisParams syn;
        syn.curve_order = order;
        syn.seed = seed;
        SynthesisResult r;
        {
          py::gil_scoped_release release;
          r = generate_sample(sp, syn);
        }
        return py::make_tuple(to_array(r.mask), json_to_py(r.manifest));
      },
      py::arg("size") = 512, py::arg("depth") = 5, py::arg("branches") = 2, py::arg("order") = 3,
      py::arg("seed") = 0, "Synthesize one mask; returns (mask, manifest).");

  m.def(
      "fit",
      [](const MaskArray& target, int order, int budget, std::uint64_t seed) {
        FitParams p;
        p.curve_order = order;
        p.budget = budget;
        p.seed = seed;
        const RasterMask t = to_mask(target);
        FitReport r;
        {
          py::gil_scoped_release release;
          r = fit(t, p);
        }
        return py::make_tuple(to_array(r.rendered), json_to_py(to_json(r)));
      },
      py::arg("target"), py::arg("order") = 3, py::arg("budget") = 2000, py::arg("seed") = 0,
      "Fit Bezier strokes to a mask; returns (rendered, report).");

  m.def(
      "evaluate_pair",
      [](const MaskArray& pred, const MaskArray& gt) {
        const MetricSet s = evaluate_pair(to_mask(pred), to_mask(gt));
        py::dict d;
        d["iou"] = s.iou;
        d["ssim"] = s.ssim;
        d["mse"] = s.mse;
        d["cr_literal"] = s.cr_literal;
        d["cr_connected"] = s.cr_connected;
        d["s_smooth"] = s.s_smooth;
        return d;
      },
      py::arg("pred"), py::arg("gt"));
  m.def("iou", [](const MaskArray& a, const MaskArray& b) { return iou(to_mask(a), to_mask(b)); });
  m.def("ssim", [](const MaskArray& a, const MaskArray& b) { return ssim(to_mask(a), to_mask(b)); });
  m.def("mse", [](const MaskArray& a, const MaskArray& b) { return mse(to_mask(a), to_mask(b)); });
  m.def("edge_smoothness", [](const MaskArray& a) { return edge_smoothness(to_mask(a)); });
  m.def("skeletonize", [](const MaskArray& a) { return to_array(skeletonize(to_mask(a))); });
  m.def("erode", [](const MaskArray& a, int r) { return to_array(erode(to_mask(a), r)); });
  m.def("dilate", [](const MaskArray& a, int r) { return to_array(dilate(to_mask(a), r)); });

  m.def(
      "bezier_point",
      [](const std::vector<std::pair<double, double>>& pts, double t) {
        const Point2 p = evaluate(make_curve(pts, 1.0, 1.0), t);
        return py::make_tuple(p.x, p.y);
      },
      py::arg("control_points"), py::arg("t"));
  m.def(
      "curvature",
      [](const std::vector<std::pair<double, double>>& pts, double t) {
        return curvature(make_curve(pts, 1.0, 1.0), t);
      },
      py::arg("control_points"), py::arg("t"));
  m.def(
      "rasterize_curve",
      [](const std::vector<std::pair<double, double>>& pts, double w0, double w1, int width, int height) {
        return to_array(rasterize(make_curve(pts, w0, w1), width, height));
      },
      py::arg("control_points"), py::arg("width_start"), py::arg("width_end"), py::arg("width"),
      py::arg("height"));

  m.def(
      "noise_schedule",
      [](int steps, double beta_start, double beta_end) {
        const auto s = diffusion::make_schedule(steps, beta_start, beta_end);
        auto vec = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
        return py::make_tuple(vec(s.betas()), vec(s.alpha_bars()), vec(s.sigmas()));
      },
      py::arg("steps") = 1000, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02,
      "Returns (betas, alpha_bars, sigmas) for t = 1..T.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in process; returns (exit_code, stdout, stderr).");
}
