#include "doctest.h"
#include "support.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/mask_fitting.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/serialization.hpp"
#include "vesselsynth/vessel_metrics.hpp"

using namespace vsynth;

namespace {

RasterMask small_target(std::uint64_t seed) {
  SkeletonParams sp = SkeletonParams::for_canvas(192, 192);
  sp.omega = 3;
  sp.seed = seed;
  SynthesisParams syn;
  syn.seed = seed;
  syn.width_root = 3.0;
  return generate_sample(sp, syn).mask;
}

}  // namespace

TEST_CASE("fit params validation and order labels") {
  FitParams p;
  CHECK_NOTHROW(p.validate());
  p.curve_order = 7;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = {};
  p.budget = 0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK(order_label(3) == "CB");
  CHECK(order_label(4) == "QB");
  CHECK(order_label(5) == "QB5");
  CHECK_THROWS_AS(order_label(2), DomainError);
}

TEST_CASE("fit recovers a small generated target and is deterministic") {
  const RasterMask target = small_target(4);
  FitParams p;
  p.budget = 600;
  const FitReport a = fit(target, p);
  CHECK(a.iou >= 0.85);
  CHECK(a.iou == iou(a.rendered, target));
  CHECK(a.rendered == render_curves(a.curves, target.width(), target.height()));
  CHECK(a.iterations_used <= p.budget);
  CHECK(a.iou >= a.initial_iou);
  for (std::size_t i = 1; i < a.iou_trajectory.size(); ++i) CHECK(a.iou_trajectory[i] >= a.iou_trajectory[i - 1]);
  for (const auto& c : a.curves) CHECK(c.order() == 3);
  CHECK(fit(target, p) == a);
}

TEST_CASE("warm-start refine of a rendered fit is a fixpoint") {
  const RasterMask target = small_target(8);
  FitParams p;
  p.budget = 300;
  const FitReport first = fit(target, p);
  const FitReport again = refine(first.rendered, first.curves, p);
  CHECK(again.iou >= 0.99);
}

TEST_CASE("fit edge cases") {
  FitParams p;
  CHECK_THROWS_AS(fit(RasterMask(32, 32), p), DomainError);

  p.curve_order = 5;
  p.budget = 200;
  const FitReport r = fit(small_target(2), p);
  for (const auto& c : r.curves) CHECK(c.order() == 5);
}

TEST_CASE("compare_orders table shape") {
  std::vector<RasterMask> targets{small_target(1), small_target(2)};
  FitParams p;
  p.budget = 200;
  const auto rows = compare_orders(targets, {3, 4}, p, 2);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.iou >= 0.0);
    CHECK(r.iou <= 1.0);
    CHECK(r.mse >= 0.0);
    CHECK(r.samples == 2);
  }
  CHECK(compare_orders(targets, {3, 4}, p, 1).front().iou == rows.front().iou);
  CHECK_THROWS_AS(compare_orders(targets, {}, p), DomainError);
  const std::string csv = order_table_csv(rows);
  CHECK(csv.rfind("method,order,iou,ssim,mse\nCB,3,", 0) == 0);
}

TEST_CASE("fit report JSON round trip") {
  FitParams p;
  p.budget = 100;
  const FitReport r = fit(small_target(5), p);
  const auto j = to_json(r);
  const FitReport back = fit_report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == r);
  CHECK_THROWS_AS(fit_report_from_json(nlohmann::json::parse(R"({"width": 3})")), ParseError);
}
