#include "mammo/sfcm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mammo/errors.hpp"
#include "mammo/simd.hpp"

namespace mammo {

double MembershipMatrix::column_sum_error() const noexcept {
  double worst = 0.0;
  for (std::size_t n = 0; n < pixels_; ++n) {
    double s = 0.0;
    for (std::size_t m = 0; m < clusters_; ++m) s += (*this)(m, n);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double MembershipMatrix::max_abs_difference(const MembershipMatrix& other) const {
  if (other.data_.size() != data_.size()) throw ArgumentError("membership matrices differ in shape");
  double worst = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) worst = std::max(worst, std::abs(data_[i] - other.data_[i]));
  return worst;
}

std::size_t MembershipMatrix::argmax(std::size_t n) const noexcept {
  std::size_t best = 0;
  for (std::size_t m = 1; m < clusters_; ++m)
    if ((*this)(m, n) > (*this)(best, n)) best = m;
  return best;
}

void SfcmConfig::validate() const {
  if (clusters < 1) throw ArgumentError("SfcmConfig: clusters must be >= 1");
  if (!(fuzziness > 1.0)) throw ArgumentError("SfcmConfig: fuzziness L must exceed 1");
  if (!(tol > 0.0)) throw ArgumentError("SfcmConfig: tol must be positive");
  if (!(membership_exp >= 0.0) || !(spatial_exp >= 0.0)) throw ArgumentError("SfcmConfig: exponents must be >= 0");
}

namespace {

void check_shape(const GrayImage& image, const MembershipMatrix& u) {
  if (u.pixels() != image.size() || u.clusters() == 0) {
    throw ArgumentError("membership matrix does not match image");
  }
}

inline double powi_fast(double x, double e) {
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  return std::pow(x, e);
}

}  // namespace

std::vector<double> fcm_centers(const GrayImage& image, const MembershipMatrix& memberships, double fuzziness) {
  check_shape(image, memberships);
  const auto px = image.pixels();
  std::vector<double> centers(memberships.clusters());
  std::vector<double> weights(px.size());
  for (std::size_t m = 0; m < memberships.clusters(); ++m) {
    const auto u = memberships.plane(m);
    for (std::size_t n = 0; n < px.size(); ++n) weights[n] = powi_fast(u[n], fuzziness);
    double mass = 0.0;
    for (double w : weights) mass += w;
    if (!(mass > 0.0)) throw DegenerateError("fuzzy cluster " + std::to_string(m) + " has no membership mass");
    centers[m] = simd::dot(weights, px) / mass;
  }
  return centers;
}

MembershipMatrix fcm_memberships(const GrayImage& image, std::span<const double> centers, double fuzziness) {
  const std::size_t c = centers.size();
  const auto px = image.pixels();
  MembershipMatrix u(c, px.size());
  // ||i - v||^(-2/(L-1)) expressed on squared distances: (d^2)^(-1/(L-1)).
  const double e = -1.0 / (fuzziness - 1.0);
  std::vector<double> inv(c);
  for (std::size_t n = 0; n < px.size(); ++n) {
    std::size_t exact = c;
    for (std::size_t m = 0; m < c; ++m) {
      const double d = px[n] - centers[m];
      const double d2 = d * d;
      if (d2 == 0.0) {
        exact = m;
        break;
      }
      inv[m] = e == -1.0 ? 1.0 / d2 : std::pow(d2, e);
    }
    if (exact < c) {
      for (std::size_t m = 0; m < c; ++m) u(m, n) = m == exact ? 1.0 : 0.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t m = 0; m < c; ++m) total += inv[m];
    for (std::size_t m = 0; m < c; ++m) u(m, n) = inv[m] / total;
  }
  return u;
}

FcmStep fcm_iterate(const GrayImage& image, const MembershipMatrix& memberships, const SfcmConfig& config) {
  config.validate();
  auto centers = fcm_centers(image, memberships, config.fuzziness);
  auto u = fcm_memberships(image, centers, config.fuzziness);
  return {std::move(u), std::move(centers)};
}

namespace {

// Window sums with replicate borders, separable: rows then columns.
std::vector<double> box_sum(std::span<const double> plane, std::size_t w, std::size_t h, std::size_t radius) {
  const auto rad = static_cast<std::ptrdiff_t>(radius);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  std::vector<double> horiz(w * h, 0.0);
  for (std::ptrdiff_t r = 0; r < sh; ++r) {
    const double* src = plane.data() + r * sw;
    double* dst = horiz.data() + r * sw;
    for (std::ptrdiff_t c = 0; c < sw; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -rad; k <= rad; ++k) acc += src[std::clamp<std::ptrdiff_t>(c + k, 0, sw - 1)];
      dst[c] = acc;
    }
  }
  std::vector<double> out(w * h, 0.0);
  for (std::ptrdiff_t r = 0; r < sh; ++r) {
    std::span<double> dst(out.data() + r * sw, w);
    for (std::ptrdiff_t k = -rad; k <= rad; ++k) {
      const std::ptrdiff_t rr = std::clamp<std::ptrdiff_t>(r + k, 0, sh - 1);
      simd::axpy(1.0, std::span<const double>(horiz.data() + rr * sw, w), dst);
    }
  }
  return out;
}

}  // namespace

MembershipMatrix spatial_refine(const MembershipMatrix& memberships, const SfcmConfig& config, std::size_t width,
                                std::size_t height) {
  if (memberships.pixels() != width * height) throw ArgumentError("spatial_refine: dimensions mismatch");
  const std::size_t c = memberships.clusters();
  const std::size_t n = memberships.pixels();
  MembershipMatrix out(c, n);
  for (std::size_t m = 0; m < c; ++m) {
    const auto h = box_sum(memberships.plane(m), width, height, config.window_radius);
    const auto u = memberships.plane(m);
    auto dst = out.plane(m);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = powi_fast(u[i], config.membership_exp) * powi_fast(h[i], config.spatial_exp);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t m = 0; m < c; ++m) total += out(m, i);
    if (!(total > 0.0)) throw DegenerateError("spatial_refine: all-zero membership column");
    for (std::size_t m = 0; m < c; ++m) out(m, i) /= total;
  }
  return out;
}

double fcm_objective(const GrayImage& image, const MembershipMatrix& memberships, std::span<const double> centers,
                     double fuzziness) {
  check_shape(image, memberships);
  if (centers.size() != memberships.clusters()) throw ArgumentError("fcm_objective: center count mismatch");
  const auto px = image.pixels();
  double j = 0.0;
  for (std::size_t m = 0; m < centers.size(); ++m) {
    const auto u = memberships.plane(m);
    for (std::size_t n = 0; n < px.size(); ++n) {
      const double d = px[n] - centers[m];
      j += powi_fast(u[n], fuzziness) * d * d;
    }
  }
  return j;
}

MembershipMatrix random_memberships(std::size_t clusters, std::size_t pixels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  MembershipMatrix u(clusters, pixels);
  for (std::size_t n = 0; n < pixels; ++n) {
    double total = 0.0;
    for (std::size_t m = 0; m < clusters; ++m) total += (u(m, n) = dist(rng));
    for (std::size_t m = 0; m < clusters; ++m) u(m, n) /= total;
  }
  return u;
}

SfcmResult sfcm_run(const GrayImage& image, const SfcmConfig& config) {
  return sfcm_run(image, config, random_memberships(config.clusters, image.size(), config.seed));
}

SfcmResult sfcm_run(const GrayImage& image, const SfcmConfig& config, MembershipMatrix initial) {
  config.validate();
  check_shape(image, initial);
  if (initial.clusters() >= 2 && !(image.max() > image.min())) {
    throw DegenerateError("sfcm_run: constant image cannot be split into clusters");
  }
  const bool spatial = !(config.membership_exp == 1.0 && config.spatial_exp == 0.0);
  SfcmResult out;
  out.memberships = std::move(initial);
  for (std::size_t it = 0; it < config.max_iter; ++it) {
    auto step = fcm_iterate(image, out.memberships, config);
    if (spatial) step.memberships = spatial_refine(step.memberships, config, image.width(), image.height());
    const double change = step.memberships.max_abs_difference(out.memberships);
    out.memberships = std::move(step.memberships);
    out.centers = std::move(step.centers);
    out.iterations = it + 1;
    out.objective_history.push_back(fcm_objective(image, out.memberships, out.centers, config.fuzziness));
    if (change < config.tol) break;
  }
  if (out.centers.empty()) out.centers = fcm_centers(image, out.memberships, config.fuzziness);
  return out;
}

GrayImage tumor_membership_map(const MembershipMatrix& memberships, std::span<const double> centers,
                               std::size_t width, std::size_t height) {
  if (centers.size() != memberships.clusters() || centers.empty()) {
    throw ArgumentError("tumor_membership_map: center count mismatch");
  }
  if (memberships.pixels() != width * height) throw ArgumentError("tumor_membership_map: dimensions mismatch");
  std::size_t best = 0;
  for (std::size_t m = 1; m < centers.size(); ++m)
    if (centers[m] > centers[best]) best = m;
  const auto plane = memberships.plane(best);
  return GrayImage(width, height, std::vector<double>(plane.begin(), plane.end()));
}

}  // namespace mammo
