#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/skeleton_tree.hpp"
#include "vesselsynth/vessel_metrics.hpp"

using namespace vsynth;

namespace {

// Tree that never touches the canvas border.
SkeletonParams roomy(int omega, int theta) {
  SkeletonParams p = SkeletonParams::for_canvas(4096, 4096);
  p.root_position = {2048, 2048};
  p.root_length = 40;
  p.omega = omega;
  p.theta_branches = theta;
  p.seed = 5;
  return p;
}

SkeletonRaster straight_branch(int w, int h, Pixel a, Pixel b) {
  SkeletonNode root;
  root.position = a.center();
  const Point2 d = b.center() - a.center();
  root.length = d.norm();
  root.direction = d * (1.0 / root.length);
  return rasterize_skeleton(root, w, h);
}

}  // namespace

TEST_CASE("tree size follows the complete-tree formula without pruning") {
  CHECK(count_nodes(generate_skeleton(roomy(1, 3))) == 4);
  CHECK(count_nodes(generate_skeleton(roomy(3, 2))) == 15);
  CHECK(count_nodes(generate_skeleton(roomy(0, 2))) == 1);
  const auto t = generate_skeleton(roomy(4, 2));
  CHECK(max_depth(t) == 4);
  const auto flat = flatten_tree(t);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flat[i]->id == int(i));
    if (!flat[i]->children.empty()) CHECK(flat[i]->children.size() == 2);
  }
  CHECK(flat[0]->position == Point2{2048, 2048});
}

TEST_CASE("same seed, same tree; params are validated") {
  SkeletonParams p = SkeletonParams::for_canvas(256, 256);
  p.seed = 99;
  const auto a = generate_skeleton(p);
  const auto b = generate_skeleton(p);
  const auto fa = flatten_tree(a), fb = flatten_tree(b);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i]->position == fb[i]->position);
    CHECK(fa[i]->length == fb[i]->length);
  }
  p.omega = 11;
  CHECK_THROWS_AS(generate_skeleton(p), DomainError);
  p.omega = 3;
  p.theta_branches = 0;
  CHECK_THROWS_AS(generate_skeleton(p), DomainError);
}

TEST_CASE("bresenham and single segment pixel bounds") {
  const auto line = bresenham({0, 0}, {7, 3});
  CHECK(line.size() == 8);
  for (std::size_t i = 1; i < line.size(); ++i) {
    CHECK(std::abs(line[i].x - line[i - 1].x) <= 1);
    CHECK(std::abs(line[i].y - line[i - 1].y) <= 1);
  }
  SkeletonNode root;
  root.position = {10, 10};
  root.direction = Point2{3, 4} * 0.2;
  root.length = 50;
  const auto s = rasterize_skeleton(root, 100, 100);
  const double n = double(s.mask.count());
  // one pixel per step along the major axis
  CHECK(n >= 50.0 / std::sqrt(2.0));
  CHECK(n <= 50.0 + 1.0);
  CHECK(n == 41.0);
  for (std::size_t i = 0; i < s.mask.size(); ++i) CHECK((s.mask.bits()[i] != 0) == (s.node_index[i] >= 0));
  REQUIRE(s.branches.size() == 1);
  root.direction = {1.0, 0.0};
  CHECK(rasterize_skeleton(root, 100, 100).mask.count() == 51);
  CHECK(s.branches[0].path.size() == s.mask.count());
}

TEST_CASE("rasterized trees own every pixel once and stay inside the canvas") {
  SkeletonParams p = SkeletonParams::for_canvas(256, 256);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    p.seed = seed;
    const auto tree = generate_skeleton(p);
    const auto s = rasterize_skeleton(tree, 256, 256);
    const auto nodes = count_nodes(tree);
    std::size_t on_paths = 0;
    for (std::size_t i = 0; i < s.mask.size(); ++i) {
      CHECK((s.mask.bits()[i] != 0) == (s.node_index[i] >= 0));
      if (s.node_index[i] >= 0) CHECK(std::size_t(s.node_index[i]) < nodes);
    }
    for (const auto& b : s.branches)
      for (const auto& q : b.path) on_paths += s.mask.at(q);
    CHECK(on_paths >= s.mask.count());
  }
}

TEST_CASE("close_skeleton bridges small gaps and never removes pixels") {
  SkeletonRaster s = straight_branch(40, 20, {2, 10}, {15, 10});
  const SkeletonRaster t = straight_branch(40, 20, {18, 10}, {35, 10});
  s.mask = bitwise_or(s.mask, t.mask);
  CHECK(oracle::components(s.mask) == 2);
  const auto closed = close_skeleton(s);
  CHECK(closed.connected);
  CHECK(closed.iterations <= 2);
  CHECK(oracle::components(closed.skeleton.mask) == 1);
  CHECK(bitwise_or(closed.skeleton.mask, s.mask) == closed.skeleton.mask);

  const auto again = close_skeleton(closed.skeleton);
  CHECK(again.skeleton.mask == closed.skeleton.mask);
  CHECK(again.iterations == 0);
}

TEST_CASE("local orientation on synthetic ridges") {
  const auto h = straight_branch(64, 64, {5, 32}, {58, 32});
  CHECK(std::abs(local_orientation(h, {30, 32}, 3)) < 0.05);
  const auto v = straight_branch(64, 64, {32, 5}, {32, 58});
  CHECK(axial_deviation(local_orientation(v, {32, 30}, 3), std::numbers::pi / 2) < 0.05);
  const auto d = straight_branch(64, 64, {5, 5}, {58, 58});
  CHECK(axial_deviation(local_orientation(d, {30, 30}, 3), std::numbers::pi / 4) < 0.1);
  CHECK_THROWS_AS(local_orientation(h, {30, 5}, 3), NoSignalError);
}

TEST_CASE("place_curve on a straight branch") {
  const auto s = straight_branch(128, 64, {5, 30}, {120, 30});
  SynthesisParams params;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    KeyedRng rng(seed);
    const BezierCurve c = place_curve(s, {5, 30}, params, rng);
    CHECK(s.mask.at(round_to_pixel(c.front())));
    CHECK(s.mask.at(round_to_pixel(c.back())));
    for (int i = 0; i <= 20; ++i) CHECK(curvature(c, i / 20.0) < 0.02);
  }
  const OrientationField field(s.mask, params.orientation_window);
  KeyedRng rng(1);
  const auto placed =
      place_curve(s, field, 0, 0, params, rng, [](int, std::size_t) { return 2.0; });
  CHECK(placed.placement.theta_fit <= placed.placement.theta_initial);
  CHECK_THROWS_AS(place_curve(s, field, 0, s.branches[0].path.size() - 1, params, rng,
                              [](int, std::size_t) { return 2.0; }),
                  BranchExhausted);
}

TEST_CASE("synthesize_mask on one straight branch") {
  const auto s = straight_branch(96, 48, {8, 24}, {70, 24});
  SynthesisParams params;
  params.seed = 3;
  const auto r = synthesize_mask(s, params);
  CHECK(r.curves.size() >= 1);
  CHECK(r.curves.size() <= 3);
  CHECK(r.coverage >= 0.95);
  CHECK(!r.coverage_warning);
  CHECK(synthesize_mask(s, params).mask == r.mask);
  CHECK(r.coverage_history.size() == r.curves.size());
  for (std::size_t i = 1; i < r.coverage_history.size(); ++i)
    CHECK(r.coverage_history[i] >= r.coverage_history[i - 1]);
}

TEST_CASE("generate_sample properties") {
  SkeletonParams sp = SkeletonParams::for_canvas(512, 512);
  sp.omega = 4;
  sp.seed = 7;
  SynthesisParams syn;
  syn.seed = 7;
  const auto r = generate_sample(sp, syn);
  CHECK(connectivity_ratio(r.mask).connected == 1.0);
  CHECK(oracle::components(r.mask) == 1);
  CHECK((r.coverage >= 0.95 || r.coverage_warning));
  const double frac = double(r.mask.count()) / double(r.mask.size());
  CHECK(frac >= 0.01);
  CHECK(frac <= 0.35);
  CHECK(r.manifest.contains("skeleton"));
  CHECK(r.manifest["seed"] == 7);

  // a root pointing straight out of the canvas leaves nothing to draw
  SkeletonParams out = sp;
  out.root_position = {256, 4};
  out.root_heading = -std::numbers::pi / 2;
  CHECK_THROWS_AS(generate_sample(out, syn), DomainError);

  SynthesisParams bad;
  bad.curve_order = 6;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
