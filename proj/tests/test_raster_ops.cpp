#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/raster_ops.hpp"
#include "vesselsynth/vessel_metrics.hpp"

using namespace vsynth;

namespace {

RasterMask square(int w, int h, int x0, int y0, int side) {
  RasterMask m(w, h);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.set(x, y);
  return m;
}

RasterMask disk(int w, int h, int cx, int cy, int r) {
  RasterMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r);
  return m;
}

}  // namespace

TEST_CASE("erode and dilate match the double-loop oracle") {
  std::mt19937_64 gen(21);
  for (int k = 0; k < 60; ++k) {
    const RasterMask m = oracle::random_mask(gen, 16, 16, k % 2 ? 0.7 : 0.2);
    for (int r = 1; r <= 3; ++r) {
      CHECK(erode(m, r) == oracle::erode(m, r));
      CHECK(dilate(m, r) == oracle::dilate(m, r));
    }
  }
  CHECK_THROWS_AS(erode(RasterMask(4, 4), 0), DomainError);
}

TEST_CASE("morphology examples") {
  CHECK(erode(RasterMask(8, 8), 1).count() == 0);
  CHECK(dilate(RasterMask(8, 8), 2).count() == 0);
  CHECK(erode(square(12, 12, 1, 1, 10), 1) == square(12, 12, 2, 2, 8));
  RasterMask dot(9, 9);
  dot.set(4, 4);
  CHECK(dilate(dot, 2).count() == 13);
  CHECK(disk_offsets(2).size() == 13);

  // closing is a superset on convex shapes; dilation is monotone
  const RasterMask d = disk(40, 40, 20, 20, 9);
  CHECK(bitwise_or(erode(dilate(d, 3), 3), d) == erode(dilate(d, 3), 3));
  const RasterMask small = disk(40, 40, 20, 20, 5);
  CHECK(bitwise_or(dilate(small, 2), dilate(d, 2)) == dilate(d, 2));
}

TEST_CASE("bitwise_or identities and inclusion-exclusion") {
  std::mt19937_64 gen(22);
  for (int k = 0; k < 50; ++k) {
    const RasterMask a = oracle::random_mask(gen, 16, 16);
    const RasterMask b = oracle::random_mask(gen, 16, 16);
    CHECK(bitwise_or(a, b) == oracle::bor(a, b));
    CHECK(bitwise_or(a, RasterMask(16, 16)) == a);
    CHECK(bitwise_or(a, a) == a);
    CHECK(bitwise_or(a, b).count() == a.count() + b.count() - bitwise_and(a, b).count());
  }
  CHECK_THROWS_AS(bitwise_or(RasterMask(4, 4), RasterMask(5, 4)), ShapeError);
}

TEST_CASE("sobel orientation on synthetic edges") {
  RasterMask flat(20, 20);
  for (double mag : sobel(flat).magnitude) CHECK(mag == 0.0);

  RasterMask step(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 10; x < 20; ++x) step.set(x, y);
  const auto g = sobel(step);
  const std::size_t i = 10u * 20u + 10u;
  CHECK(g.magnitude[i] > 0.0);
  CHECK(std::abs(std::sin(g.angle[i])) < 1e-12);

  GrayImage diag(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) diag.at(x, y) = x + y > 40 ? 1.0 : 0.0;
  const auto gd = sobel(diag);
  const std::size_t j = 20u * 40u + 21u;
  CHECK(gd.magnitude[j] > 0.0);
  CHECK(std::abs(gd.angle[j] - std::numbers::pi / 4) < 0.05);
}

TEST_CASE("skeletonize: thin paths unchanged, square golden, idempotent") {
  RasterMask path(30, 30);
  for (int i = 0; i < 20; ++i) path.set(3 + i, 5 + i / 2);
  CHECK(skeletonize(path) == path);

  const RasterMask sq = square(30, 30, 5, 5, 20);
  const RasterMask s = skeletonize(sq);
  CHECK(oracle::components(s) == 1);
  CHECK(s.count() <= 40);
  CHECK(s.count() == 2);  // frozen from the first run
  CHECK(skeletonize(s) == s);

  std::mt19937_64 gen(23);
  for (int k = 0; k < 20; ++k) {
    const RasterMask m = dilate(oracle::random_mask(gen, 32, 32, 0.03), 2);
    const RasterMask sk = skeletonize(m);
    CHECK(oracle::components(sk) == oracle::components(m));
    CHECK(skeletonize(sk) == sk);
    CHECK(bitwise_or(sk, m) == m);
  }
}

TEST_CASE("canny on disks and constant images") {
  CHECK(canny_edges(RasterMask(30, 30)).count() == 0);
  RasterMask full(30, 30);
  for (auto& b : full.bits()) b = 1;
  CHECK(canny_edges(full).count() == 0);

  const RasterMask d = disk(64, 64, 32, 32, 20);
  const RasterMask e = canny_edges(d);
  const double circ = 2.0 * std::numbers::pi * 20.0;
  CHECK(std::abs(double(e.count()) - circ) <= 0.25 * circ);
  const RasterMask band = dilate(bitwise_and(d, complement(erode(d, 1))), 2);
  CHECK(bitwise_or(e, band) == band);
}

TEST_CASE("connected components and boundary tracing") {
  CHECK(connected_components(RasterMask(5, 5)).components.empty());
  RasterMask two(10, 10);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      two.set(x, y);
      two.set(x + 5, y + 5);
    }
  const auto cc = connected_components(two);
  REQUIRE(cc.components.size() == 2);
  CHECK(cc.components[0].size == 4);
  CHECK(cc.components[1].size == 4);

  std::mt19937_64 gen(24);
  for (int k = 0; k < 20; ++k) {
    const RasterMask m = oracle::random_mask(gen, 20, 20, 0.4);
    const auto c8 = connected_components(m, 8);
    std::size_t total = 0;
    for (const auto& c : c8.components) total += c.size;
    CHECK(total == m.count());
    CHECK(int(c8.components.size()) == oracle::components(m));
    CHECK(connected_components(m, 4).components.size() >= c8.components.size());
  }
  CHECK_THROWS_AS(connected_components(two, 6), DomainError);

  RasterMask one(5, 5);
  one.set(2, 2);
  const auto c1 = boundary_trace(one);
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].size() == 1);

  const RasterMask sq = square(14, 14, 2, 2, 10);
  const auto c2 = boundary_trace(sq);
  REQUIRE(c2.size() == 1);
  CHECK(c2[0].size() == 36);
  for (const auto& p : c2[0]) CHECK(sq.at(p));
}

TEST_CASE("distance transform against brute force") {
  std::mt19937_64 gen(25);
  const RasterMask m = dilate(oracle::random_mask(gen, 24, 24, 0.05), 3);
  const auto edt = distance_transform(m);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      double best = 1e9;
      if (m.at(x, y)) {
        for (int yy = -1; yy <= 24; ++yy)
          for (int xx = -1; xx <= 24; ++xx)
            if (!m.get(xx, yy)) best = std::min(best, std::hypot(xx - x, yy - y));
      } else {
        best = 0.0;
      }
      CHECK(edt[m.index(x, y)] == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("pgm round trip and parse errors") {
  std::mt19937_64 gen(26);
  const RasterMask m = oracle::random_mask(gen, 13, 7);
  CHECK(decode_pgm(encode_pgm(m)) == m);
  CHECK_THROWS_AS(decode_pgm("P2\n3 3\n255\n"), ParseError);
  CHECK_THROWS_AS(decode_pgm("P5\n3 3\n255\nab"), ParseError);
  CHECK_THROWS_AS(load_pgm("/nonexistent/file.pgm"), IoError);

  const auto dir = oracle::scratch_dir("pgm");
  save_pgm(m, dir / "m.pgm");
  CHECK(load_pgm(dir / "m.pgm") == m);
}
