#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mammo/image.hpp"

namespace mammo {

/// Decode a binary "P5" graymap. Intensities are divided by maxval.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);
GrayImage read_pgm_file(const std::filesystem::path& path);

std::vector<std::uint8_t> write_pgm(const GrayImage& image);
std::vector<std::uint8_t> write_pgm(const BinaryMask& mask);

using Rgb = std::array<std::uint8_t, 3>;

/// "P6" rendering of `image` with every pixel of `contour_mask` painted `color`.
std::vector<std::uint8_t> write_overlay_ppm(const GrayImage& image, const BinaryMask& contour_mask,
                                            Rgb color = {255, 0, 0});

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace mammo
