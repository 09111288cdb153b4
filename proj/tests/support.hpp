// Test-only oracles: straightforward double loops and closed forms that share
// no code with the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vesselsynth/bezier.hpp"
#include "vesselsynth/raster.hpp"

namespace oracle {

using vsynth::BezierCurve;
using vsynth::Point2;
using vsynth::RasterMask;

inline RasterMask random_mask(std::mt19937_64& gen, int w, int h, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  RasterMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, coin(gen));
  return m;
}

inline BezierCurve random_curve(std::mt19937_64& gen, int order, double extent = 100.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Point2> pts;
  for (int i = 0; i <= order; ++i) pts.push_back({u(gen), u(gen)});
  return BezierCurve(pts, 3.0, 1.5);
}

// dx^2 + dy^2 <= r^2 disk, outside canvas is background
inline RasterMask erode(const RasterMask& m, int r) {
  RasterMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy)
        for (int dx = -r; dx <= r && all; ++dx)
          if (dx * dx + dy * dy <= r * r && !m.get(x + dx, y + dy)) all = false;
      out.set(x, y, all);
    }
  return out;
}

inline RasterMask dilate(const RasterMask& m, int r) {
  RasterMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy)
        for (int dx = -r; dx <= r && !any; ++dx)
          if (dx * dx + dy * dy <= r * r && m.get(x + dx, y + dy)) any = true;
      out.set(x, y, any);
    }
  return out;
}

inline RasterMask bor(const RasterMask& a, const RasterMask& b) {
  RasterMask out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) out.set(x, y, a.at(x, y) || b.at(x, y));
  return out;
}

inline double iou(const RasterMask& a, const RasterMask& b) {
  long inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      inter += a.at(x, y) && b.at(x, y);
      uni += a.at(x, y) || b.at(x, y);
    }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

inline double mse(const RasterMask& a, const RasterMask& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const double d = double(a.at(x, y)) - double(b.at(x, y));
      s += d * d;
    }
  return s / double(a.width() * a.height());
}

// 8-connected components by flood fill
inline int components(const RasterMask& m) {
  std::vector<char> seen(m.size(), 0);
  int n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y) || seen[m.index(x, y)]) continue;
      ++n;
      std::vector<std::pair<int, int>> stack{{x, y}};
      seen[m.index(x, y)] = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (m.get(nx, ny) && !seen[m.index(nx, ny)]) {
              seen[m.index(nx, ny)] = 1;
              stack.push_back({nx, ny});
            }
          }
      }
    }
  return n;
}

// Power-basis evaluation: expand the Bernstein form into monomials with
// long double binomials, then Horner.
inline Point2 power_basis(const BezierCurve& c, double t) {
  const auto p = c.control_points();
  const int n = c.order();
  auto binom = [](int a, int b) {
    long double r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  long double ax = 0, ay = 0;
  for (int k = n; k >= 0; --k) {
    long double cx = 0, cy = 0;
    for (int i = 0; i <= k; ++i) {
      const long double s = ((k - i) % 2 ? -1 : 1) * binom(k, i);
      cx += s * p[i].x;
      cy += s * p[i].y;
    }
    cx *= binom(n, k);
    cy *= binom(n, k);
    ax = ax * t + cx;
    ay = ay * t + cy;
  }
  return {double(ax), double(ay)};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vesselsynth_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
