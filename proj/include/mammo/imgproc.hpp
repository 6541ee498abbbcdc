#pragma once

#include <cstddef>

#include "mammo/image.hpp"

namespace mammo {

/// Corner-aligned bilinear resampling: output pixel x maps to x*(w-1)/(out_w-1).
GrayImage resize_bilinear(const GrayImage& image, std::size_t out_w, std::size_t out_h);

/// Bilinear sample at fractional (x, y); `fill` outside [0,w-1]x[0,h-1].
double sample_bilinear(const GrayImage& image, double x, double y, double fill) noexcept;

LabelMap connected_components(const BinaryMask& mask);

/// Largest component by pixel count, lowest label on ties.
BinaryMask largest_component(const LabelMap& labels);

/// Separable Gaussian blur truncated at 3 sigma with replicate borders.
GrayImage gaussian_blur(const GrayImage& image, double sigma);

}  // namespace mammo
