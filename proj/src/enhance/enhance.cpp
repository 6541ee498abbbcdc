#include "mammo/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"

namespace mammo {

void EnhanceConfig::validate() const {
  if (!(r1 >= 0.0 && r1 < r2 && r2 <= 255.0)) throw ArgumentError("EnhanceConfig: need 0 <= r1 < r2 <= 255");
  if (median_window < 1) throw ArgumentError("EnhanceConfig: median_window must be >= 1");
  if (!(pectoral_tolerance >= 0.0)) throw ArgumentError("EnhanceConfig: pectoral_tolerance must be >= 0");
  if (!(pectoral_area_cap > 0.0 && pectoral_area_cap <= 1.0)) {
    throw ArgumentError("EnhanceConfig: pectoral_area_cap must be in (0,1]");
  }
}

GrayImage median_filter(const GrayImage& image, std::size_t window) {
  if (window < 1) throw ArgumentError("median_filter: window must be >= 1");
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto w = static_cast<std::ptrdiff_t>(window);
  const std::size_t n = window * window;
  GrayImage out(image.width(), image.height());
  std::vector<double> buf(n);
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      std::size_t i = 0;
      const auto r0 = static_cast<std::ptrdiff_t>(r) - half;
      const auto c0 = static_cast<std::ptrdiff_t>(c) - half;
      for (std::ptrdiff_t dr = 0; dr < w; ++dr)
        for (std::ptrdiff_t dc = 0; dc < w; ++dc) buf[i++] = image.clamped(r0 + dr, c0 + dc);
      const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(buf.begin(), mid, buf.end());
      double m = *mid;
      if (n % 2 == 0) m = 0.5 * (m + *std::max_element(buf.begin(), mid));
      out.at(r, c) = m;
    }
  }
  return out;
}

GrayImage normalize(const GrayImage& image, double r1, double r2) {
  if (!(r1 >= 0.0 && r1 < r2 && r2 <= 255.0)) throw ArgumentError("normalize: need 0 <= r1 < r2 <= 255");
  const double lo = image.min() * 255.0;
  const double hi = image.max() * 255.0;
  if (!(hi > lo)) throw DegenerateError("normalize: constant image");
  GrayImage out(image.width(), image.height());
  auto dst = out.pixels();
  const auto src = image.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double t = (src[i] * 255.0 - lo) / (hi - lo);
    dst[i] = (r1 + t * (r2 - r1)) / 255.0;
  }
  return out;
}

std::array<std::uint64_t, 256> histogram_u8(const GrayImage& image) {
  std::array<std::uint64_t, 256> h{};
  for (double v : image.pixels()) ++h[to_u8(v)];
  return h;
}

std::uint8_t otsu_threshold(const std::array<std::uint64_t, 256>& histogram) {
  // Between-class variance for split t is (N*S0 - n0*S)^2 / (N^2 * n0 * n1)
  // with n0, S0 the count and level sum of bins <= t. Candidates are compared
  // exactly as quotient + remainder/denominator in 128-bit arithmetic.
  using u128 = unsigned __int128;
  u128 total = 0, sum = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    total += histogram[i];
    sum += static_cast<u128>(histogram[i]) * i;
  }
  if (total == 0) return 0;
  if (total > (u128{1} << 28)) throw ArgumentError("otsu_threshold: histogram total exceeds 2^28 pixels");

  bool have = false;
  std::uint8_t best_t = 0;
  u128 best_q = 0, best_r = 0, best_d = 1;
  u128 n0 = 0, s0 = 0;
  std::size_t only_level = 0;
  for (std::size_t t = 0; t < 256; ++t) {
    n0 += histogram[t];
    s0 += static_cast<u128>(histogram[t]) * t;
    if (histogram[t] > 0) only_level = t;
    const u128 n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const u128 a = total * s0, b = n0 * sum;
    const u128 diff = a > b ? a - b : b - a;
    const u128 num = diff * diff;
    const u128 den = n0 * n1;
    const u128 q = num / den, r = num % den;
    // (q, r/den) > (best_q, best_r/best_d) ?
    const bool better = !have || q > best_q || (q == best_q && r * best_d > best_r * den);
    if (better) {
      have = true;
      best_t = static_cast<std::uint8_t>(t);
      best_q = q;
      best_r = r;
      best_d = den;
    }
  }
  return have ? best_t : static_cast<std::uint8_t>(only_level);
}

OtsuResult otsu_threshold(const GrayImage& image) {
  OtsuResult out;
  out.threshold = otsu_threshold(histogram_u8(image));
  out.mask = BinaryMask(image.width(), image.height());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) out.mask.set(i, to_u8(px[i]) > out.threshold);
  return out;
}

GrayImage remove_artifacts(const GrayImage& image) {
  const auto otsu = otsu_threshold(image);
  const BinaryMask breast = largest_component(connected_components(otsu.mask));
  GrayImage out = image;
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (!breast[i]) px[i] = 0.0;
  return out;
}

namespace {

// Region growing from `seed` over pixels of `allowed`, admitting 8-neighbours
// whose intensity is within `tol` of the running region mean.
BinaryMask grow_region(const GrayImage& image, const BinaryMask& allowed, std::size_t seed, double tol) {
  BinaryMask region(image.width(), image.height());
  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  const auto px = image.pixels();
  std::deque<std::size_t> queue{seed};
  region.set(seed, true);
  double sum = px[seed];
  std::size_t count = 1;
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    const auto r = static_cast<std::ptrdiff_t>(p) / w;
    const auto c = static_cast<std::ptrdiff_t>(p) % w;
    for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
      for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
        const auto rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
        const auto q = static_cast<std::size_t>(rr * w + cc);
        if (region[q] || !allowed[q]) continue;
        if (std::abs(px[q] - sum / static_cast<double>(count)) <= tol) {
          region.set(q, true);
          sum += px[q];
          ++count;
          queue.push_back(q);
        }
      }
    }
  }
  return region;
}

}  // namespace

PectoralResult remove_pectoral(const GrayImage& image, const EnhanceConfig& config) {
  config.validate();
  PectoralResult unchanged{image, BinaryMask(image.width(), image.height())};
  if (image.empty()) return unchanged;

  const std::size_t w = image.width(), h = image.height();
  double left = 0.0, right = 0.0;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      if (c < w / 2) left += image.at(r, c);
      else if (c >= w - w / 2) right += image.at(r, c);
    }
  const bool mirrored = right > left;
  const GrayImage oriented = mirrored ? mirror_horizontal(image) : image;

  const BinaryMask breast = threshold_above(oriented, 0.0);
  const std::size_t breast_area = breast.count();
  const std::size_t seed_row = static_cast<std::size_t>(std::floor(0.02 * static_cast<double>(h)));
  const std::size_t seed_col = static_cast<std::size_t>(std::floor(0.02 * static_cast<double>(w)));
  const std::size_t seed = seed_row * w + seed_col;
  if (breast_area == 0 || !breast[seed]) return unchanged;

  const BinaryMask region = grow_region(oriented, breast, seed, config.pectoral_tolerance / 255.0);
  bool touches_top = false, touches_left = false;
  for (std::size_t c = 0; c < w; ++c) touches_top = touches_top || region.at(0, c);
  for (std::size_t r = 0; r < h; ++r) touches_left = touches_left || region.at(r, 0);
  const double frac = static_cast<double>(region.count()) / static_cast<double>(breast_area);
  if (!touches_top || !touches_left || !(frac < config.pectoral_area_cap)) return unchanged;

  GrayImage cleaned = oriented;
  auto px = cleaned.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (region[i]) px[i] = 0.0;
  if (!mirrored) return {std::move(cleaned), region};
  return {mirror_horizontal(cleaned), mirror_horizontal(region)};
}

PectoralResult enhance(const GrayImage& denoised, const EnhanceConfig& config) {
  config.validate();
  const GrayImage smoothed = median_filter(denoised, config.median_window);
  const GrayImage stretched = normalize(smoothed, config.r1, config.r2);
  return remove_pectoral(remove_artifacts(stretched), config);
}

}  // namespace mammo
