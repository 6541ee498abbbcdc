#include "mammo/bm3d.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/simd.hpp"

namespace mammo {
namespace {

constexpr double kLevels = 255.0;

struct DctBasis {
  std::size_t k = 0;
  std::vector<double> m;  // m[u*k + x]

  explicit DctBasis(std::size_t size) : k(size), m(size * size) {
    for (std::size_t u = 0; u < k; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / static_cast<double>(k)) : std::sqrt(2.0 / static_cast<double>(k));
      for (std::size_t x = 0; x < k; ++x) {
        m[u * k + x] = a * std::cos(std::numbers::pi * (2.0 * static_cast<double>(x) + 1.0) *
                                    static_cast<double>(u) / (2.0 * static_cast<double>(k)));
      }
    }
  }
};

const DctBasis& basis(std::size_t k) {
  thread_local std::vector<DctBasis> cache;
  for (const auto& b : cache)
    if (b.k == k) return b;
  cache.emplace_back(k);
  return cache.back();
}

// out = M * X (forward) or M^T * X (inverse) applied along rows then columns.
void separable(double* block, std::size_t k, bool inverse, std::vector<double>& tmp) {
  const auto& m = basis(k).m;
  tmp.assign(k * k, 0.0);
  // columns: tmp[u][x] = sum_y M[u][y] * block[y][x]
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t y = 0; y < k; ++y) {
      const double c = inverse ? m[y * k + u] : m[u * k + y];
      for (std::size_t x = 0; x < k; ++x) tmp[u * k + x] += c * block[y * k + x];
    }
  // rows: block[u][v] = sum_x tmp[u][x] * M[v][x]
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < k; ++v) {
      double acc = 0.0;
      for (std::size_t x = 0; x < k; ++x) acc += tmp[u * k + x] * (inverse ? m[x * k + v] : m[v * k + x]);
      block[u * k + v] = acc;
    }
}

void forward_3d(std::vector<double>& stack, std::size_t k, std::size_t g) {
  std::vector<double> tmp;
  for (std::size_t s = 0; s < g; ++s) separable(stack.data() + s * k * k, k, false, tmp);
  transform::walsh_hadamard(stack, g, k * k);
}

void inverse_3d(std::vector<double>& stack, std::size_t k, std::size_t g) {
  std::vector<double> tmp;
  transform::walsh_hadamard(stack, g, k * k);
  for (std::size_t s = 0; s < g; ++s) separable(stack.data() + s * k * k, k, true, tmp);
}

std::vector<BlockPos> match_positions(const GrayImage& image, BlockPos ref, std::size_t k, std::size_t n,
                                      double tau, std::size_t radius, std::vector<double>& dist_out) {
  const std::size_t w = image.width(), h = image.height();
  if (ref.row + k > h || ref.col + k > w) throw ArgumentError("block_match: reference block outside image");
  const std::size_t r0 = ref.row > radius ? ref.row - radius : 0;
  const std::size_t c0 = ref.col > radius ? ref.col - radius : 0;
  const std::size_t r1 = std::min(ref.row + radius, h - k);
  const std::size_t c1 = std::min(ref.col + radius, w - k);
  // Threshold on the 8-bit mean-squared scale, converted to a raw [0,1] SSD.
  const double kk = static_cast<double>(k * k);
  const double limit = tau * kk / (kLevels * kLevels);
  const double* base = image.pixels().data();
  const double* ref_ptr = base + ref.row * w + ref.col;

  struct Candidate {
    double ssd;
    BlockPos pos;
  };
  std::vector<Candidate> found;
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      if (r == ref.row && c == ref.col) continue;
      const double d = simd::block_squared_distance(ref_ptr, w, base + r * w + c, w, k, k);
      if (d <= limit) found.push_back({d, {r, c}});
    }
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    if (a.ssd != b.ssd) return a.ssd < b.ssd;
    if (a.pos.row != b.pos.row) return a.pos.row < b.pos.row;
    return a.pos.col < b.pos.col;
  });

  std::vector<BlockPos> out{ref};
  dist_out.assign(1, 0.0);
  for (const auto& cand : found) {
    if (out.size() >= n) break;
    out.push_back(cand.pos);
    dist_out.push_back(cand.ssd * kLevels * kLevels / kk);
  }
  const std::size_t padded = std::bit_ceil(out.size());
  while (out.size() < padded) {
    out.push_back(ref);
    dist_out.push_back(0.0);
  }
  return out;
}

std::vector<double> extract_stack(const GrayImage& image, const std::vector<BlockPos>& coords, std::size_t k) {
  std::vector<double> stack(coords.size() * k * k);
  for (std::size_t g = 0; g < coords.size(); ++g)
    for (std::size_t y = 0; y < k; ++y) {
      auto src = image.row(coords[g].row + y).subspan(coords[g].col, k);
      std::copy(src.begin(), src.end(), stack.begin() + static_cast<std::ptrdiff_t>(g * k * k + y * k));
    }
  return stack;
}

class Aggregator {
 public:
  Aggregator(std::size_t w, std::size_t h) : w_(w), h_(h), num_(w * h, 0.0), den_(w * h, 0.0) {}

  void add(const std::vector<double>& stack, const std::vector<BlockPos>& coords, std::size_t k, double weight) {
    for (std::size_t g = 0; g < coords.size(); ++g)
      for (std::size_t y = 0; y < k; ++y) {
        const std::size_t off = (coords[g].row + y) * w_ + coords[g].col;
        const double* src = stack.data() + g * k * k + y * k;
        for (std::size_t x = 0; x < k; ++x) {
          num_[off + x] += weight * src[x];
          den_[off + x] += weight;
        }
      }
  }

  GrayImage finish() const {
    GrayImage out(w_, h_);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (!(den_[i] > 0.0)) throw NumericalError("BM3D aggregation: pixel not covered by any block");
      px[i] = std::clamp(num_[i] / den_[i], 0.0, 1.0);
    }
    return out;
  }

 private:
  std::size_t w_, h_;
  std::vector<double> num_, den_;
};

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("BM3D: sigma must be positive");
}

void check_fits(const GrayImage& image, std::size_t k) {
  if (image.width() < k || image.height() < k) {
    throw ArgumentError("BM3D: image smaller than block size " + std::to_string(k));
  }
}

}  // namespace

Bm3dProfile Bm3dProfile::for_sigma(double sigma, double cutoff) {
  Bm3dProfile p;
  if (sigma >= cutoff) {
    p.tau_hard = 5000.0;
    p.tau_wie = 3500.0;
  } else {
    p.tau_hard = 400.0;
    p.tau_wie = 2500.0;
  }
  return p;
}

void Bm3dProfile::validate() const {
  auto pow2 = [](std::size_t n) { return n >= 1 && std::has_single_bit(n); };
  if (k_hard < 4 || k_wie < 4) throw ArgumentError("Bm3dProfile: block size must be >= 4");
  if (!pow2(n_hard) || !pow2(n_wie)) throw ArgumentError("Bm3dProfile: group size must be a power of two");
  if (!(lambda_3d > 0.0)) throw ArgumentError("Bm3dProfile: lambda_3d must be positive");
  if (!(tau_hard > 0.0) || !(tau_wie > 0.0)) throw ArgumentError("Bm3dProfile: tau must be positive");
  if (step < 1) throw ArgumentError("Bm3dProfile: step must be >= 1");
}

std::vector<std::size_t> reference_anchors(std::size_t extent, std::size_t k, std::size_t step) {
  std::vector<std::size_t> out;
  if (extent < k) return out;
  for (std::size_t p = 0; p + k <= extent; p += step) out.push_back(p);
  if (out.back() != extent - k) out.push_back(extent - k);
  return out;
}

namespace transform {

void dct2d(std::vector<double>& block, std::size_t k) {
  std::vector<double> tmp;
  separable(block.data(), k, false, tmp);
}

void idct2d(std::vector<double>& block, std::size_t k) {
  std::vector<double> tmp;
  separable(block.data(), k, true, tmp);
}

void walsh_hadamard(std::vector<double>& stack, std::size_t count, std::size_t stride) {
  if (count <= 1) return;
  for (std::size_t len = 1; len < count; len <<= 1) {
    for (std::size_t i = 0; i < count; i += 2 * len) {
      for (std::size_t j = i; j < i + len; ++j) {
        double* a = stack.data() + j * stride;
        double* b = stack.data() + (j + len) * stride;
        for (std::size_t e = 0; e < stride; ++e) {
          const double x = a[e], y = b[e];
          a[e] = x + y;
          b[e] = x - y;
        }
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(count));
  for (double& v : stack) v *= scale;
}

}  // namespace transform

BlockGroup block_match(const GrayImage& image, BlockPos ref, const Bm3dProfile& profile, Bm3dStage stage) {
  profile.validate();
  const bool hard = stage == Bm3dStage::Hard;
  const std::size_t k = hard ? profile.k_hard : profile.k_wie;
  BlockGroup group;
  group.block_size = k;
  group.coordinates = match_positions(image, ref, k, hard ? profile.n_hard : profile.n_wie,
                                      hard ? profile.tau_hard : profile.tau_wie, profile.search_radius,
                                      group.distances);
  group.stack = extract_stack(image, group.coordinates, k);
  return group;
}

GrayImage bm3d_hard_stage(const GrayImage& noisy, double sigma, const Bm3dProfile& profile) {
  check_sigma(sigma);
  profile.validate();
  const std::size_t k = profile.k_hard;
  check_fits(noisy, k);
  const double threshold = profile.lambda_3d * sigma / kLevels;

  Aggregator agg(noisy.width(), noisy.height());
  std::vector<double> dist;
  for (std::size_t r : reference_anchors(noisy.height(), k, profile.step)) {
    for (std::size_t c : reference_anchors(noisy.width(), k, profile.step)) {
      const auto coords = match_positions(noisy, {r, c}, k, profile.n_hard, profile.tau_hard,
                                          profile.search_radius, dist);
      auto stack = extract_stack(noisy, coords, k);
      forward_3d(stack, k, coords.size());
      std::size_t retained = 0;
      for (std::size_t i = 0; i < stack.size(); ++i) {
        if (i != 0 && std::abs(stack[i]) < threshold) {
          stack[i] = 0.0;
        } else if (stack[i] != 0.0) {
          ++retained;
        }
      }
      inverse_3d(stack, k, coords.size());
      agg.add(stack, coords, k, 1.0 / (1.0 + static_cast<double>(retained)));
    }
  }
  return agg.finish();
}

GrayImage bm3d_wiener_stage(const GrayImage& noisy, const GrayImage& basic, double sigma,
                            const Bm3dProfile& profile) {
  check_sigma(sigma);
  profile.validate();
  if (noisy.width() != basic.width() || noisy.height() != basic.height()) {
    throw ArgumentError("bm3d_wiener_stage: noisy and basic dimensions differ");
  }
  const std::size_t k = profile.k_wie;
  check_fits(noisy, k);
  const double var = (sigma / kLevels) * (sigma / kLevels);

  Aggregator agg(noisy.width(), noisy.height());
  std::vector<double> dist;
  for (std::size_t r : reference_anchors(noisy.height(), k, profile.step)) {
    for (std::size_t c : reference_anchors(noisy.width(), k, profile.step)) {
      const auto coords = match_positions(basic, {r, c}, k, profile.n_wie, profile.tau_wie,
                                          profile.search_radius, dist);
      auto guide = extract_stack(basic, coords, k);
      auto stack = extract_stack(noisy, coords, k);
      forward_3d(guide, k, coords.size());
      forward_3d(stack, k, coords.size());
      double energy = 0.0;
      for (std::size_t i = 0; i < stack.size(); ++i) {
        // The group DC passes unattenuated.
        const double b2 = guide[i] * guide[i];
        const double wgt = i == 0 ? 1.0 : b2 / (b2 + var);
        stack[i] *= wgt;
        energy += wgt * wgt;
      }
      inverse_3d(stack, k, coords.size());
      agg.add(stack, coords, k, 1.0 / (1.0 + energy));
    }
  }
  return agg.finish();
}

GrayImage bm3d_denoise(const GrayImage& noisy, double sigma, const std::optional<Bm3dProfile>& profile) {
  check_sigma(sigma);
  const Bm3dProfile p = profile.value_or(Bm3dProfile::for_sigma(sigma));
  const GrayImage basic = bm3d_hard_stage(noisy, sigma, p);
  return bm3d_wiener_stage(noisy, basic, sigma, p);
}

double psnr(const GrayImage& reference, const GrayImage& test) {
  if (reference.size() != test.size() || reference.empty()) throw ArgumentError("psnr: size mismatch");
  const double mse = simd::squared_distance(reference.pixels(), test.pixels()) / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace mammo
