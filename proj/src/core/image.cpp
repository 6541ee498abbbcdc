#include "mammo/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mammo/errors.hpp"

namespace mammo {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != width_ * height_) {
    throw ArgumentError("GrayImage: data length does not match dimensions");
  }
}

double GrayImage::clamped(std::ptrdiff_t row, std::ptrdiff_t col) const noexcept {
  const auto h = static_cast<std::ptrdiff_t>(height_);
  const auto w = static_cast<std::ptrdiff_t>(width_);
  row = std::clamp<std::ptrdiff_t>(row, 0, h - 1);
  col = std::clamp<std::ptrdiff_t>(col, 0, w - 1);
  return data_[static_cast<std::size_t>(row * w + col)];
}

double GrayImage::min() const {
  if (data_.empty()) throw DegenerateError("min of empty image");
  return *std::min_element(data_.begin(), data_.end());
}

double GrayImage::max() const {
  if (data_.empty()) throw DegenerateError("max of empty image");
  return *std::max_element(data_.begin(), data_.end());
}

double GrayImage::mean() const {
  if (data_.empty()) throw DegenerateError("mean of empty image");
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::uint8_t to_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

BinaryMask threshold_above(const GrayImage& image, double level) {
  BinaryMask mask(image.width(), image.height());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) mask.set(i, px[i] > level);
  return mask;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ArgumentError("dice: mask dimensions differ");
  }
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    inter += a[i] && b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

BinaryMask contour(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  const std::size_t w = mask.width(), h = mask.height();
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      const bool edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w || !mask.at(r - 1, c) ||
                        !mask.at(r + 1, c) || !mask.at(r, c - 1) || !mask.at(r, c + 1);
      out.set(r, c, edge);
    }
  }
  return out;
}

GrayImage mirror_horizontal(const GrayImage& image) {
  GrayImage out(image.width(), image.height());
  for (std::size_t r = 0; r < image.height(); ++r) {
    auto src = image.row(r);
    std::reverse_copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

BinaryMask mirror_horizontal(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  const std::size_t w = mask.width();
  for (std::size_t r = 0; r < mask.height(); ++r)
    for (std::size_t c = 0; c < w; ++c) out.set(r, w - 1 - c, mask.at(r, c));
  return out;
}

}  // namespace mammo
