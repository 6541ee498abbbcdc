#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mammo {

/// Row-major grayscale image with intensities in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const noexcept { return data_[row * width_ + col]; }

  /// Access with replicate-border clamping of signed coordinates.
  double clamped(std::ptrdiff_t row, std::ptrdiff_t col) const noexcept;

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * width_, width_);
  }
  std::span<double> row(std::size_t r) noexcept {
    return std::span<double>(data_).subspan(r * width_, width_);
  }

  double min() const;
  double max() const;
  double mean() const;

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), data_(width * height, fill ? 1 : 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool at(std::size_t row, std::size_t col) const noexcept { return data_[row * width_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v) noexcept { data_[row * width_ + col] = v ? 1 : 0; }
  bool operator[](std::size_t i) const noexcept { return data_[i] != 0; }
  void set(std::size_t i, bool v) noexcept { data_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// 8-connected component labels; 0 is background, components are 1..count.
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> labels;
  std::size_t component_count = 0;
};

/// Quantize an intensity in [0,1] to the nearest 8-bit level.
std::uint8_t to_u8(double v) noexcept;

BinaryMask threshold_above(const GrayImage& image, double level);

/// Dice overlap 2|A∩B|/(|A|+|B|); two empty masks score 1.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Pixels of `mask` with at least one 4-neighbour outside the mask.
BinaryMask contour(const BinaryMask& mask);

GrayImage mirror_horizontal(const GrayImage& image);
BinaryMask mirror_horizontal(const BinaryMask& mask);

}  // namespace mammo
