#include "mammo/cnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"

namespace mammo::cnn {
namespace {

struct Resized {
  std::size_t w, h;
};

Resized shorter_side_to(std::size_t w, std::size_t h, std::size_t target) {
  if (w <= h) {
    return {target, std::max(target, static_cast<std::size_t>(std::lround(static_cast<double>(h) *
                                                                           static_cast<double>(target) /
                                                                           static_cast<double>(w))))};
  }
  return {std::max(target, static_cast<std::size_t>(
                               std::lround(static_cast<double>(w) * static_cast<double>(target) /
                                           static_cast<double>(h)))),
          target};
}

// Same mapping resize_bilinear uses.
double resize_coord(double i, std::size_t in, std::size_t out) {
  if (out == 1) return 0.5 * static_cast<double>(in - 1);
  return i * static_cast<double>(in - 1) / static_cast<double>(out - 1);
}

}  // namespace

AugmentParams draw_rotation(std::mt19937_64& rng, AugmentParams base) {
  base.angle_deg = std::uniform_real_distribution<double>(0.0, 360.0)(rng);
  return base;
}

AugmentParams draw_crop(std::mt19937_64& rng, AugmentParams base) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  base.crop_x = unit(rng);
  base.crop_y = unit(rng);
  base.mirror = unit(rng) < 0.5;
  base.scale = std::uniform_real_distribution<double>(0.9, 1.1)(rng);
  std::uniform_int_distribution<int> shift(-4, 4);
  base.shift_x = shift(rng);
  base.shift_y = shift(rng);
  return base;
}

GrayImage apply_augmentation(const GrayImage& image, const AugmentParams& p, std::size_t target_size,
                             double fill) {
  if (target_size == 0) throw ArgumentError("augment: target_size must be >= 1");
  if (image.empty()) throw ArgumentError("augment: empty image");
  if (!(p.scale > 0.0)) throw ArgumentError("augment: scale must be positive");
  const std::size_t w = image.width(), h = image.height();
  const auto rs = shorter_side_to(w, h, target_size);
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double theta = p.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double ox = std::floor(p.crop_x * static_cast<double>(rs.w - target_size));
  const double oy = std::floor(p.crop_y * static_cast<double>(rs.h - target_size));

  // Inverse map: crop pixel -> resized image -> scaled -> mirrored -> rotated source.
  GrayImage cropped(target_size, target_size);
  for (std::size_t r = 0; r < target_size; ++r) {
    for (std::size_t c = 0; c < target_size; ++c) {
      double x = resize_coord(static_cast<double>(c) + ox, w, rs.w);
      double y = resize_coord(static_cast<double>(r) + oy, h, rs.h);
      if (p.scale != 1.0) {
        x = cx + (x - cx) / p.scale;
        y = cy + (y - cy) / p.scale;
      }
      if (p.mirror) x = static_cast<double>(w - 1) - x;
      if (theta != 0.0) {
        const double dx = x - cx, dy = y - cy;
        x = cx + cs * dx + sn * dy;
        y = cy - sn * dx + cs * dy;
      }
      cropped.at(r, c) = sample_bilinear(image, x, y, fill);
    }
  }
  if (p.shift_x == 0 && p.shift_y == 0) return cropped;
  GrayImage shifted(target_size, target_size);
  for (std::size_t r = 0; r < target_size; ++r)
    for (std::size_t c = 0; c < target_size; ++c) {
      shifted.at(r, c) = cropped.clamped(static_cast<std::ptrdiff_t>(r) - p.shift_y,
                                         static_cast<std::ptrdiff_t>(c) - p.shift_x);
    }
  return shifted;
}

GrayImage augment_image(const GrayImage& image, std::mt19937_64& rng, std::size_t target_size, double fill) {
  return apply_augmentation(image, draw_crop(rng, draw_rotation(rng)), target_size, fill);
}

std::vector<Sample> build_augmented_set(std::span<const Sample> train, std::mt19937_64& rng,
                                        std::size_t target_size) {
  if (train.empty()) throw ArgumentError("build_augmented_set: empty training set");
  const double fill = mean_pixel(train);
  std::vector<Sample> out;
  out.reserve(train.size() * 16);
  for (const auto& s : train) {
    for (int rot = 0; rot < 4; ++rot) {
      const AugmentParams rotation = draw_rotation(rng);
      for (int crop = 0; crop < 4; ++crop) {
        out.push_back({apply_augmentation(s.image, draw_crop(rng, rotation), target_size, fill), s.label});
      }
    }
  }
  return out;
}

double mean_pixel(std::span<const Sample> samples) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    for (double v : s.image.pixels()) sum += v;
    count += s.image.size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

GrayImage resize_center_crop(const GrayImage& image, std::size_t target_size) {
  const auto rs = shorter_side_to(image.width(), image.height(), target_size);
  const GrayImage resized = resize_bilinear(image, rs.w, rs.h);
  const std::size_t ox = (rs.w - target_size) / 2, oy = (rs.h - target_size) / 2;
  GrayImage out(target_size, target_size);
  for (std::size_t r = 0; r < target_size; ++r)
    for (std::size_t c = 0; c < target_size; ++c) out.at(r, c) = resized.at(r + oy, c + ox);
  return out;
}

}  // namespace mammo::cnn
