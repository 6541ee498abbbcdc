#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mammo/image.hpp"

namespace mammo {

/// Parameters of the two-stage block-matching 3-D filter. Distance thresholds
/// tau_* are mean squared block differences on the 8-bit intensity scale.
struct Bm3dProfile {
  std::size_t k_hard = 8;
  std::size_t k_wie = 8;
  std::size_t n_hard = 16;
  std::size_t n_wie = 16;
  double lambda_3d = 2.7;
  double tau_hard = 400.0;
  double tau_wie = 2500.0;
  std::size_t search_radius = 16;
  std::size_t step = 4;

  /// Default sigma (8-bit scale) at which the high-noise thresholds apply.
  static constexpr double kHighNoiseSigma = 40.0;

  /// Defaults with thresholds chosen by noise level: sigma >= cutoff selects
  /// tau_hard=5000, tau_wie=3500; otherwise tau_hard=400, tau_wie=2500.
  static Bm3dProfile for_sigma(double sigma, double cutoff = kHighNoiseSigma);

  void validate() const;
};

enum class Bm3dStage { Hard, Wiener };

struct BlockPos {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const BlockPos&) const = default;
};

/// A stack of similar k x k blocks. Slice g occupies
/// stack[g*k*k, (g+1)*k*k). Slice 0 is the reference block.
struct BlockGroup {
  std::size_t block_size = 0;
  std::vector<BlockPos> coordinates;
  std::vector<double> distances;  // mean squared difference, 8-bit scale
  std::vector<double> stack;

  std::size_t size() const noexcept { return coordinates.size(); }
};

BlockGroup block_match(const GrayImage& image, BlockPos ref, const Bm3dProfile& profile, Bm3dStage stage);

/// First stage: collaborative hard thresholding. sigma is on the 8-bit scale.
GrayImage bm3d_hard_stage(const GrayImage& noisy, double sigma, const Bm3dProfile& profile);

/// Second stage: empirical Wiener filtering guided by the basic estimate.
GrayImage bm3d_wiener_stage(const GrayImage& noisy, const GrayImage& basic, double sigma,
                            const Bm3dProfile& profile);

GrayImage bm3d_denoise(const GrayImage& noisy, double sigma, const std::optional<Bm3dProfile>& profile = {});

/// Reference-block anchors along one axis: 0, step, 2*step, ... plus extent-k.
std::vector<std::size_t> reference_anchors(std::size_t extent, std::size_t k, std::size_t step);

namespace transform {
/// Orthonormal 2-D DCT-II of a k x k block, in place.
void dct2d(std::vector<double>& block, std::size_t k);
void idct2d(std::vector<double>& block, std::size_t k);
/// Orthonormal Walsh-Hadamard transform across `count` (power of two) slices
/// of length `stride` each; self-inverse.
void walsh_hadamard(std::vector<double>& stack, std::size_t count, std::size_t stride);
}  // namespace transform

double psnr(const GrayImage& reference, const GrayImage& test);

}  // namespace mammo
