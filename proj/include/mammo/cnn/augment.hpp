#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "mammo/image.hpp"

namespace mammo::cnn {

/// One draw of the augmentation pipeline.
struct AugmentParams {
  double angle_deg = 0.0;   // [0, 360)
  bool mirror = false;
  double scale = 1.0;       // [0.9, 1.1], zoom about the center
  double crop_x = 0.5;      // crop origin as a fraction of the free range
  double crop_y = 0.5;
  int shift_x = 0;          // [-4, 4]
  int shift_y = 0;
};

AugmentParams draw_rotation(std::mt19937_64& rng, AugmentParams base = {});
AugmentParams draw_crop(std::mt19937_64& rng, AugmentParams base);

/// rotate (fill with `fill`) -> mirror -> scale -> resize shorter side to
/// target -> crop target x target -> shift with replicate fill.
GrayImage apply_augmentation(const GrayImage& image, const AugmentParams& params, std::size_t target_size,
                             double fill);

/// Random draw of every parameter, then apply_augmentation.
GrayImage augment_image(const GrayImage& image, std::mt19937_64& rng, std::size_t target_size, double fill);

struct Sample {
  GrayImage image;
  std::size_t label = 0;  // 0 normal, 1 abnormal
};

/// 16 variants per source: 4 rotation draws x 4 crop draws, each with its own
/// mirror, scale and shift. Labels are inherited.
std::vector<Sample> build_augmented_set(std::span<const Sample> train, std::mt19937_64& rng,
                                        std::size_t target_size);

/// Mean intensity over every pixel of every sample.
double mean_pixel(std::span<const Sample> samples);

/// Shorter side resized to `target_size`, center crop.
GrayImage resize_center_crop(const GrayImage& image, std::size_t target_size);

}  // namespace mammo::cnn
