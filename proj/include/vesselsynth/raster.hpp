#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vesselsynth/geometry.hpp"

namespace vsynth {

/// Binary image on a fixed canvas, row-major, one byte per pixel (0 or 1).
class RasterMask {
 public:
  RasterMask() = default;
  RasterMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }
  bool empty_canvas() const { return bits_.empty(); }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t index(int x, int y) const { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  bool at(Pixel p) const { return at(p.x, p.y); }
  /// Out-of-canvas reads return background.
  bool get(int x, int y) const { return in_bounds(x, y) && at(x, y); }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  void set(Pixel p, bool v = true) { set(p.x, p.y, v); }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  std::size_t count() const;
  bool any() const;
  bool same_shape(const RasterMask& o) const { return width_ == o.width_ && height_ == o.height_; }

  bool operator==(const RasterMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Real-valued single-channel image.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  double& at(int x, int y) { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  double at(int x, int y) const { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  /// Edge-replicated read.
  double clamped(int x, int y) const;
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  bool same_shape(const GrayImage& o) const { return width_ == o.width_ && height_ == o.height_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Foreground maps to `high`, background to 0.
GrayImage to_gray(const RasterMask& mask, double high = 1.0);

RasterMask bitwise_or(const RasterMask& a, const RasterMask& b);
RasterMask bitwise_and(const RasterMask& a, const RasterMask& b);
RasterMask complement(const RasterMask& m);

// Binary PGM (P5, maxval 255). Foreground is written as 255; on load any
// value above maxval / 2 is foreground.
std::string encode_pgm(const RasterMask& mask);
RasterMask decode_pgm(std::string_view data);
RasterMask load_pgm(const std::filesystem::path& path);
void save_pgm(const RasterMask& mask, const std::filesystem::path& path);

/// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace vsynth
