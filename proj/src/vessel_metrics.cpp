#include "vesselsynth/vessel_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "vesselsynth/errors.hpp"
#include "vesselsynth/raster_ops.hpp"

namespace vsynth {

namespace {

void require_same_shape(int wa, int ha, int wb, int hb) {
  if (wa != wb || ha != hb) {
    throw ShapeError("image shapes differ: " + std::to_string(wa) + "x" + std::to_string(ha) +
                     " vs " + std::to_string(wb) + "x" + std::to_string(hb));
  }
}

}  // namespace

double iou(const RasterMask& a, const RasterMask& b) {
  require_same_shape(a.width(), a.height(), b.width(), b.height());
  std::size_t inter = 0, uni = 0;
  auto pa = a.bits(), pb = b.bits();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    inter += std::size_t(pa[i] & pb[i]);
    uni += std::size_t(pa[i] | pb[i]);
  }
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

double mse(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a.width(), a.height(), b.width(), b.height());
  if (a.size() == 0) return 0.0;
  auto va = a.values(), vb = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    acc += d * d;
  }
  return acc / double(va.size());
}

double mse(const RasterMask& a, const RasterMask& b) { return mse(to_gray(a), to_gray(b)); }

namespace {

int reflect(int i, int n) {
  // Half-sample symmetric: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

std::vector<double> gaussian_filter(const std::vector<double>& src, int w, int h,
                                    const std::vector<double>& kernel) {
  const int r = int(kernel.size()) / 2;
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        acc += kernel[std::size_t(k + r)] * src[std::size_t(y) * std::size_t(w) + std::size_t(reflect(x + k, w))];
      }
      tmp[std::size_t(y) * std::size_t(w) + std::size_t(x)] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        acc += kernel[std::size_t(k + r)] * tmp[std::size_t(reflect(y + k, h)) * std::size_t(w) + std::size_t(x)];
      }
      out[std::size_t(y) * std::size_t(w) + std::size_t(x)] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
  require_same_shape(a.width(), a.height(), b.width(), b.height());
  const int w = a.width(), h = a.height();
  if (w < 8 || h < 8) throw DomainError("SSIM requires images of at least 8x8");
  if (params.window < 1 || params.window % 2 == 0 || !(params.sigma > 0.0)) {
    throw DomainError("SSIM window must be odd and sigma positive");
  }
  const int r = params.window / 2;
  std::vector<double> kernel(static_cast<std::size_t>(params.window));
  double ksum = 0.0;
  for (int i = -r; i <= r; ++i) {
    kernel[std::size_t(i + r)] = std::exp(-double(i * i) / (2.0 * params.sigma * params.sigma));
    ksum += kernel[std::size_t(i + r)];
  }
  for (auto& v : kernel) v /= ksum;

  const std::size_t n = a.size();
  std::vector<double> x(a.values().begin(), a.values().end());
  std::vector<double> y(b.values().begin(), b.values().end());
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = gaussian_filter(x, w, h, kernel);
  const auto my = gaussian_filter(y, w, h, kernel);
  const auto sxx = gaussian_filter(xx, w, h, kernel);
  const auto syy = gaussian_filter(yy, w, h, kernel);
  const auto sxy = gaussian_filter(xy, w, h, kernel);
  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / double(n);
}

double ssim(const RasterMask& a, const RasterMask& b) { return ssim(to_gray(a, 255.0), to_gray(b, 255.0)); }

ConnectivityRatio connectivity_ratio(const RasterMask& mask) {
  ConnectivityRatio cr;
  const std::size_t fg = mask.count();
  if (fg == 0) return cr;
  const RasterMask skel = skeletonize(mask);
  const std::size_t sk = skel.count();
  cr.literal = double(sk) / double(fg);
  const auto cc = connected_components(skel, 8);
  std::size_t largest = 0;
  for (const auto& c : cc.components) largest = std::max(largest, c.size);
  cr.connected = sk == 0 ? 0.0 : double(largest) / double(sk);
  return cr;
}

namespace {

constexpr std::size_t kMinContour = 12;
constexpr int kStencil = 4;

double contour_curvature_sum(const std::vector<Pixel>& contour, std::size_t& points) {
  const std::size_t n = contour.size();
  std::vector<Point2> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point2 acc;
    for (int k = -2; k <= 2; ++k) {
      const Pixel& p = contour[std::size_t(std::ptrdiff_t(i + n) + k) % n];
      acc.x += p.x;
      acc.y += p.y;
    }
    s[i] = acc * (1.0 / 5.0);
  }
  std::vector<double> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = distance(s[(i + 1) % n], s[i]);
  std::nth_element(steps.begin(), steps.begin() + std::ptrdiff_t(n / 2), steps.end());
  double ds = steps[n / 2];
  if (n % 2 == 0) {
    const double lower = *std::max_element(steps.begin(), steps.begin() + std::ptrdiff_t(n / 2));
    ds = 0.5 * (ds + lower);
  }
  if (!(ds > 0.0)) return 0.0;
  const double scale = 1.0 / ((kStencil * ds) * (kStencil * ds));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& next = s[(i + kStencil) % n];
    const Point2& prev = s[(i + n - kStencil) % n];
    const Point2 d2 = (next + prev - s[i] * 2.0) * scale;
    sum += d2.norm();
  }
  points += n;
  return sum;
}

}  // namespace

double edge_smoothness(const RasterMask& mask) {
  double sum = 0.0;
  std::size_t points = 0;
  for (const auto& contour : boundary_trace(mask)) {
    if (contour.size() <= kMinContour) continue;
    sum += contour_curvature_sum(contour, points);
  }
  return points == 0 ? 0.0 : sum / double(points);
}

MetricSet evaluate_pair(const RasterMask& pred, const RasterMask& gt) {
  MetricSet m;
  m.iou = iou(pred, gt);
  m.ssim = ssim(pred, gt);
  m.mse = mse(pred, gt);
  const auto cr = connectivity_ratio(pred);
  m.cr_literal = cr.literal;
  m.cr_connected = cr.connected;
  m.s_smooth = edge_smoothness(pred);
  return m;
}

std::string metric_csv_header() { return "sample_id,iou,ssim,mse,cr_literal,cr_connected,s_smooth"; }

std::string metric_csv_row(const std::string& sample_id, const MetricSet& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", m.iou, m.ssim, m.mse, m.cr_literal,
                m.cr_connected, m.s_smooth);
  return sample_id + buf;
}

}  // namespace vsynth
