#include "vesselsynth/raster_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "vesselsynth/errors.hpp"

namespace vsynth {

std::vector<Pixel> disk_offsets(int radius) {
  std::vector<Pixel> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy});
    }
  }
  return out;
}

namespace {

// Half-extent of the disk's horizontal run at each row offset.
std::vector<int> disk_runs(int radius) {
  std::vector<int> runs(static_cast<std::size_t>(2 * radius + 1));
  for (int dy = -radius; dy <= radius; ++dy) {
    int hw = 0;
    while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
    runs[std::size_t(dy + radius)] = hw;
  }
  return runs;
}

// Row prefix sums: prefix[y][x] = number of foreground pixels in row y, [0, x).
std::vector<int> row_prefix(const RasterMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<int> prefix(std::size_t(w + 1) * std::size_t(h), 0);
  for (int y = 0; y < h; ++y) {
    int* row = &prefix[std::size_t(y) * std::size_t(w + 1)];
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (mask.at(x, y) ? 1 : 0);
  }
  return prefix;
}

enum class Morph { erode, dilate };

RasterMask morph(const RasterMask& mask, int radius, Morph op) {
  if (radius < 1) throw DomainError("structuring element radius must be >= 1");
  const int w = mask.width(), h = mask.height();
  RasterMask out(w, h);
  const auto runs = disk_runs(radius);
  const auto prefix = row_prefix(mask);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool result = (op == Morph::erode);
      for (int dy = -radius; dy <= radius && result == (op == Morph::erode); ++dy) {
        const int hw = runs[std::size_t(dy + radius)];
        const int yy = y + dy;
        const int lo = x - hw, hi = x + hw;
        if (yy < 0 || yy >= h) {
          if (op == Morph::erode) result = false;
          continue;
        }
        const int clo = std::max(lo, 0), chi = std::min(hi, w - 1);
        const int* row = &prefix[std::size_t(yy) * std::size_t(w + 1)];
        const int ones = row[chi + 1] - row[clo];
        if (op == Morph::erode) {
          if (lo < 0 || hi >= w || ones != hi - lo + 1) result = false;
        } else if (ones > 0) {
          result = true;
        }
      }
      if (result) out.set(x, y);
    }
  }
  return out;
}

}  // namespace

RasterMask erode(const RasterMask& mask, int radius) { return morph(mask, radius, Morph::erode); }
RasterMask dilate(const RasterMask& mask, int radius) { return morph(mask, radius, Morph::dilate); }

GradientField sobel(const GrayImage& image) {
  GradientField f;
  f.width = image.width();
  f.height = image.height();
  const std::size_t n = image.size();
  f.gx.assign(n, 0.0);
  f.gy.assign(n, 0.0);
  f.magnitude.assign(n, 0.0);
  f.angle.assign(n, 0.0);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      auto v = [&](int dx, int dy) { return image.clamped(x + dx, y + dy); };
      const double gx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
      const double gy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
      const std::size_t i = std::size_t(y) * std::size_t(f.width) + std::size_t(x);
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = std::hypot(gx, gy);
      double a = std::atan2(gy, gx);
      if (a <= -std::numbers::pi) a = std::numbers::pi;
      f.angle[i] = a;
    }
  }
  return f;
}

GradientField sobel(const RasterMask& mask) { return sobel(to_gray(mask)); }

namespace {

// Neighbors P2..P9 clockwise from north, in the usual Zhang-Suen numbering.
constexpr std::array<Pixel, 8> kRing = {{{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

bool zhang_suen_deletable(const RasterMask& m, int x, int y, int pass) {
  std::array<int, 8> p{};
  int b = 0;
  for (int k = 0; k < 8; ++k) {
    p[std::size_t(k)] = m.get(x + kRing[std::size_t(k)].x, y + kRing[std::size_t(k)].y) ? 1 : 0;
    b += p[std::size_t(k)];
  }
  if (b < 2 || b > 6) return false;
  int a = 0;
  for (int k = 0; k < 8; ++k) {
    if (p[std::size_t(k)] == 0 && p[std::size_t((k + 1) % 8)] == 1) ++a;
  }
  if (a != 1) return false;
  // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
  if (pass == 0) return p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0;
  return p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0;
}

}  // namespace

RasterMask skeletonize(const RasterMask& mask) {
  RasterMask m = mask;
  std::vector<Pixel> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      candidates.clear();
      for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
          if (m.at(x, y) && zhang_suen_deletable(m, x, y, pass)) candidates.push_back({x, y});
        }
      }
      for (const auto& c : candidates) {
        if (zhang_suen_deletable(m, c.x, c.y, pass)) {
          m.set(c.x, c.y, false);
          changed = true;
        }
      }
    }
  }
  return m;
}

namespace {

GrayImage gaussian_blur(const GrayImage& src, double sigma, int size) {
  const int r = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[std::size_t(i + r)] = std::exp(-double(i * i) / (2.0 * sigma * sigma));
    sum += k[std::size_t(i + r)];
  }
  for (auto& v : k) v /= sum;
  GrayImage tmp(src.width(), src.height());
  GrayImage out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[std::size_t(i + r)] * src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[std::size_t(i + r)] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

RasterMask canny_edges(const RasterMask& mask, const CannyParams& params) {
  if (!(params.sigma > 0.0) || params.kernel_size < 1 || params.kernel_size % 2 == 0) {
    throw DomainError("canny: sigma must be positive and kernel size odd");
  }
  if (!(params.low_ratio >= 0.0 && params.low_ratio <= params.high_ratio && params.high_ratio <= 1.0)) {
    throw DomainError("canny: require 0 <= low_ratio <= high_ratio <= 1");
  }
  const int w = mask.width(), h = mask.height();
  RasterMask edges(w, h);
  if (w == 0 || h == 0) return edges;
  const GradientField g = sobel(gaussian_blur(to_gray(mask, 255.0), params.sigma, params.kernel_size));
  const double max_mag = *std::max_element(g.magnitude.begin(), g.magnitude.end());
  if (!(max_mag > 1e-9)) return edges;

  auto mag = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return g.magnitude[std::size_t(y) * std::size_t(w) + std::size_t(x)];
  };

  // Non-maximum suppression along the gradient direction quantized to 4 bins.
  std::vector<double> thin(g.magnitude.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
      const double m = g.magnitude[i];
      if (m <= 0.0) continue;
      double deg = g.angle[i] * 180.0 / std::numbers::pi;
      if (deg < 0) deg += 180.0;
      int dx, dy;
      if (deg < 22.5 || deg >= 157.5) {
        dx = 1; dy = 0;
      } else if (deg < 67.5) {
        dx = 1; dy = 1;
      } else if (deg < 112.5) {
        dx = 0; dy = 1;
      } else {
        dx = -1; dy = 1;
      }
      // Ties resolve toward the forward neighbor so plateaus stay one pixel thick.
      if (m > mag(x + dx, y + dy) && m >= mag(x - dx, y - dy)) thin[i] = m;
    }
  }

  const double high = params.high_ratio * max_mag;
  const double low = params.low_ratio * max_mag;
  std::deque<Pixel> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = thin[std::size_t(y) * std::size_t(w) + std::size_t(x)];
      if (v >= high && v > 0.0) {
        edges.set(x, y);
        queue.push_back({x, y});
      }
    }
  }
  while (!queue.empty()) {
    Pixel p = queue.front();
    queue.pop_front();
    for (const auto& d : kRing) {
      const int nx = p.x + d.x, ny = p.y + d.y;
      if (!edges.in_bounds(nx, ny) || edges.at(nx, ny)) continue;
      const double v = thin[std::size_t(ny) * std::size_t(w) + std::size_t(nx)];
      if (v >= low && v > 0.0) {
        edges.set(nx, ny);
        queue.push_back({nx, ny});
      }
    }
  }
  return edges;
}

ComponentMap connected_components(const RasterMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw DomainError("connectivity must be 4 or 8");
  static constexpr std::array<Pixel, 4> kFour = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  const int w = mask.width(), h = mask.height();
  ComponentMap out;
  out.labels.assign(mask.size(), 0);
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || out.labels[mask.index(x, y)] != 0) continue;
      Component c;
      c.label = int(out.components.size()) + 1;
      c.first = {x, y};
      out.labels[mask.index(x, y)] = c.label;
      stack.push_back({x, y});
      while (!stack.empty()) {
        Pixel p = stack.back();
        stack.pop_back();
        ++c.size;
        auto visit = [&](int nx, int ny) {
          if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) return;
          int& l = out.labels[mask.index(nx, ny)];
          if (l != 0) return;
          l = c.label;
          stack.push_back({nx, ny});
        };
        if (connectivity == 4) {
          for (const auto& d : kFour) visit(p.x + d.x, p.y + d.y);
        } else {
          for (const auto& d : kRing) visit(p.x + d.x, p.y + d.y);
        }
      }
      out.components.push_back(c);
    }
  }
  return out;
}

std::vector<std::vector<Pixel>> boundary_trace(const RasterMask& mask) {
  // Moore neighborhood clockwise (image coordinates) starting from west.
  static constexpr std::array<Pixel, 8> kMoore = {
      {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};
  const auto cc = connected_components(mask, 8);
  std::vector<std::vector<Pixel>> contours;
  contours.reserve(cc.components.size());
  for (const auto& comp : cc.components) {
    auto inside = [&](int x, int y) {
      return mask.in_bounds(x, y) && cc.labels[mask.index(x, y)] == comp.label;
    };
    std::vector<Pixel> contour{comp.first};
    // The first pixel in scan order has background to its west.
    Pixel cur = comp.first;
    int back = 0;
    bool have_first_move = false;
    Pixel first_from{}, first_to{};
    bool closed = false;
    while (!closed) {
      bool moved = false;
      for (int k = 1; k <= 8 && !moved; ++k) {
        const int d = (back + k) % 8;
        const Pixel next{cur.x + kMoore[std::size_t(d)].x, cur.y + kMoore[std::size_t(d)].y};
        if (!inside(next.x, next.y)) continue;
        // Jacob's criterion: stop on repeating the first move.
        if (!have_first_move) {
          have_first_move = true;
          first_from = cur;
          first_to = next;
        } else if (cur == first_from && next == first_to) {
          contour.pop_back();
          closed = true;
          break;
        }
        // The new backtrack is the last background neighbor examined,
        // re-expressed relative to `next`.
        const int pd = (back + k - 1) % 8;
        const Pixel prev{cur.x + kMoore[std::size_t(pd)].x, cur.y + kMoore[std::size_t(pd)].y};
        for (int i = 0; i < 8; ++i) {
          if (next.x + kMoore[std::size_t(i)].x == prev.x && next.y + kMoore[std::size_t(i)].y == prev.y) {
            back = i;
            break;
          }
        }
        cur = next;
        contour.push_back(cur);
        moved = true;
      }
      if (!moved) break;  // isolated pixel
    }
    contours.push_back(std::move(contour));
  }
  return contours;
}

namespace {

// Squared distance transform of a 1-D sampled function (Felzenszwalb &
// Huttenlocher lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = int(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[std::size_t(q)] == kInf) continue;
    if (f[std::size_t(v[0])] == kInf) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      const int p = v[std::size_t(k)];
      s = ((f[std::size_t(q)] + double(q) * q) - (f[std::size_t(p)] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[std::size_t(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[std::size_t(k)] = q;
    z[std::size_t(k)] = s;
    z[std::size_t(k + 1)] = kInf;
  }
  if (f[std::size_t(v[0])] == kInf) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[std::size_t(k + 1)] < q) ++k;
    const int p = v[std::size_t(k)];
    d[std::size_t(q)] = double(q - p) * (q - p) + f[std::size_t(p)];
  }
}

}  // namespace

std::vector<double> distance_transform(const RasterMask& mask) {
  // Pad by one background pixel on every side so the canvas border acts as
  // background.
  const int w = mask.width() + 2, h = mask.height() + 2;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(std::size_t(w) * std::size_t(h), 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) grid[std::size_t(y + 1) * std::size_t(w) + std::size_t(x + 1)] = kInf;
    }
  }
  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n + 1));
  for (int x = 0; x < w; ++x) {
    f.resize(static_cast<std::size_t>(h));
    d.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) f[std::size_t(y)] = grid[std::size_t(y) * std::size_t(w) + std::size_t(x)];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[std::size_t(y) * std::size_t(w) + std::size_t(x)] = d[std::size_t(y)];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(static_cast<std::size_t>(w));
    d.resize(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) f[std::size_t(x)] = grid[std::size_t(y) * std::size_t(w) + std::size_t(x)];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid[std::size_t(y) * std::size_t(w) + std::size_t(x)] = d[std::size_t(x)];
  }
  std::vector<double> out(mask.size(), 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        out[mask.index(x, y)] = std::sqrt(grid[std::size_t(y + 1) * std::size_t(w) + std::size_t(x + 1)]);
      }
    }
  }
  return out;
}

}  // namespace vsynth
