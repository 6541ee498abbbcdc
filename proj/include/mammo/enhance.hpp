#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "mammo/image.hpp"

namespace mammo {

struct EnhanceConfig {
  std::size_t median_window = 10;
  double r1 = 60.0;   // 8-bit scale
  double r2 = 210.0;  // 8-bit scale
  double pectoral_tolerance = 16.0;  // gray levels
  double pectoral_area_cap = 0.5;    // fraction of breast area

  void validate() const;
};

/// Windowed median with replicate borders. The window is anchored so the
/// output pixel sits at offset (w/2, w/2); even windows average the two middle
/// order statistics.
GrayImage median_filter(const GrayImage& image, std::size_t window);

/// Linear stretch of [min, max] onto [r1, r2] (8-bit scale), returned in [0,1].
GrayImage normalize(const GrayImage& image, double r1, double r2);

struct OtsuResult {
  std::uint8_t threshold = 0;
  BinaryMask mask;  // intensity level > threshold
};

OtsuResult otsu_threshold(const GrayImage& image);

/// Otsu threshold of a 256-bin histogram. Only thresholds leaving both classes
/// non-empty compete; ties go to the lowest. A single populated level is its
/// own threshold.
std::uint8_t otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

std::array<std::uint64_t, 256> histogram_u8(const GrayImage& image);

/// Keeps the largest Otsu foreground component (the breast) and zeroes the rest.
GrayImage remove_artifacts(const GrayImage& image);

struct PectoralResult {
  GrayImage image;
  BinaryMask removed;
};

PectoralResult remove_pectoral(const GrayImage& image, const EnhanceConfig& config = {});

/// median -> normalize -> artifact removal -> pectoral removal.
PectoralResult enhance(const GrayImage& denoised, const EnhanceConfig& config = {});

}  // namespace mammo
