#include "vesselsynth/raster.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "vesselsynth/errors.hpp"

namespace vsynth {

RasterMask::RasterMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DomainError("mask dimensions must be non-negative");
  bits_.assign(std::size_t(width) * std::size_t(height), 0);
}

std::size_t RasterMask::count() const {
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool RasterMask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DomainError("image dimensions must be non-negative");
  values_.assign(std::size_t(width) * std::size_t(height), fill);
}

double GrayImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

GrayImage to_gray(const RasterMask& mask, double high) {
  GrayImage g(mask.width(), mask.height());
  auto src = mask.bits();
  auto dst = g.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? high : 0.0;
  return g;
}

namespace {

void require_same_shape(const RasterMask& a, const RasterMask& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("mask shapes differ: " + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()));
  }
}

}  // namespace

RasterMask bitwise_or(const RasterMask& a, const RasterMask& b) {
  require_same_shape(a, b);
  RasterMask out(a.width(), a.height());
  auto pa = a.bits(), pb = b.bits();
  auto po = out.bits();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] | pb[i];
  return out;
}

RasterMask bitwise_and(const RasterMask& a, const RasterMask& b) {
  require_same_shape(a, b);
  RasterMask out(a.width(), a.height());
  auto pa = a.bits(), pb = b.bits();
  auto po = out.bits();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] & pb[i];
  return out;
}

RasterMask complement(const RasterMask& m) {
  RasterMask out(m.width(), m.height());
  auto pm = m.bits();
  auto po = out.bits();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pm[i] ? 0 : 1;
  return out;
}

std::string encode_pgm(const RasterMask& mask) {
  std::string header = "P5\n" + std::to_string(mask.width()) + " " +
                       std::to_string(mask.height()) + "\n255\n";
  std::string out = header;
  out.reserve(header.size() + mask.size());
  for (auto b : mask.bits()) out.push_back(b ? char(255) : char(0));
  return out;
}

namespace {

// Header tokens are separated by whitespace; '#' starts a comment running to
// end of line. Exactly one whitespace byte separates maxval from the raster.
class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view data) : data_(data) {}

  long next_number(const char* what) {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError(std::string("PGM: expected ") + what);
    if (pos_ - start > 9) throw ParseError(std::string("PGM: ") + what + " out of range");
    return std::stol(std::string(data_.substr(start, pos_ - start)));
  }

  std::size_t raster_start() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      throw ParseError("PGM: missing whitespace after maxval");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view data_;
  std::size_t pos_ = 2;
};

}  // namespace

RasterMask decode_pgm(std::string_view data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') {
    throw ParseError("PGM: missing P5 magic number");
  }
  PgmHeaderReader reader(data);
  long width = reader.next_number("width");
  long height = reader.next_number("height");
  long maxval = reader.next_number("maxval");
  if (width <= 0 || height <= 0) throw ParseError("PGM: non-positive dimensions");
  if (maxval < 1 || maxval > 255) throw ParseError("PGM: only 8-bit maxval (1..255) is supported");
  std::size_t start = reader.raster_start();
  std::size_t n = std::size_t(width) * std::size_t(height);
  if (data.size() < start + n) {
    throw ParseError("PGM: truncated raster (expected " + std::to_string(n) + " bytes, got " +
                     std::to_string(data.size() - std::min(start, data.size())) + ")");
  }
  RasterMask mask{int(width), int(height)};
  auto bits = mask.bits();
  for (std::size_t i = 0; i < n; ++i) {
    bits[i] = 2 * long(static_cast<unsigned char>(data[start + i])) > maxval ? 1 : 0;
  }
  return mask;
}

RasterMask load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void save_pgm(const RasterMask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(mask));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), std::streamsize(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into place: " + path.string());
  }
}

}  // namespace vsynth
