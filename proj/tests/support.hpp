#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mammo/image.hpp"

namespace testing {

inline mammo::GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mammo::GrayImage img(w, h);
  for (auto& p : img.pixels()) p = u(rng);
  return img;
}

/// Random image on the 8-bit grid (values k/255).
inline mammo::GrayImage random_u8_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  mammo::GrayImage img(w, h);
  for (auto& p : img.pixels()) p = u(rng) / 255.0;
  return img;
}

/// Left half 0.2, right half 0.8.
inline mammo::GrayImage two_valued(std::size_t w, std::size_t h) {
  mammo::GrayImage img(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img.at(r, c) = c < w / 2 ? 0.2 : 0.8;
  return img;
}

inline mammo::BinaryMask disk_mask(std::size_t size, double cx, double cy, double radius) {
  mammo::BinaryMask m(size, size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
      m.set(r, c, dx * dx + dy * dy <= radius * radius);
    }
  return m;
}

struct DiskPhantom {
  mammo::GrayImage image;
  mammo::BinaryMask truth;
};

/// 0.8 disk on 0.2 background plus Gaussian noise (not clamped).
inline DiskPhantom noisy_disk(std::size_t size, double radius, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, noise);
  const double c = static_cast<double>(size) / 2.0;
  DiskPhantom p{mammo::GrayImage(size, size), disk_mask(size, c, c, radius)};
  for (std::size_t i = 0; i < p.image.size(); ++i) p.image.pixels()[i] = (p.truth[i] ? 0.8 : 0.2) + nd(rng);
  return p;
}

/// Piecewise-smooth test scene: ramp background, bright disk, mid-gray bar.
inline mammo::GrayImage bm3d_phantom(std::size_t size) {
  mammo::GrayImage img(size, size);
  const double s = static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      double v = 0.3 + 0.1 * x / s;
      if ((y - 0.5 * s) * (y - 0.5 * s) + (x - 0.4 * s) * (x - 0.4 * s) < 0.055 * s * s) v = 0.75;
      if (y > 0.7 * s && x > 0.62 * s && x < 0.9 * s) v = 0.55;
      img.at(r, c) = v;
    }
  return img;
}

inline mammo::GrayImage add_noise(const mammo::GrayImage& clean, double sigma8, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma8 / 255.0);
  mammo::GrayImage out = clean;
  for (auto& p : out.pixels()) p = std::clamp(p + nd(rng), 0.0, 1.0);
  return out;
}

inline std::string slurp_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mammo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
