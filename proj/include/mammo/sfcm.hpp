#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mammo/image.hpp"

namespace mammo {

/// C x N fuzzy memberships stored cluster-major: value(m, n) = data[m*N + n].
class MembershipMatrix {
 public:
  MembershipMatrix() = default;
  MembershipMatrix(std::size_t clusters, std::size_t pixels, double fill = 0.0)
      : clusters_(clusters), pixels_(pixels), data_(clusters * pixels, fill) {}

  std::size_t clusters() const noexcept { return clusters_; }
  std::size_t pixels() const noexcept { return pixels_; }
  double& operator()(std::size_t m, std::size_t n) noexcept { return data_[m * pixels_ + n]; }
  double operator()(std::size_t m, std::size_t n) const noexcept { return data_[m * pixels_ + n]; }
  std::span<double> plane(std::size_t m) noexcept { return std::span<double>(data_).subspan(m * pixels_, pixels_); }
  std::span<const double> plane(std::size_t m) const noexcept {
    return std::span<const double>(data_).subspan(m * pixels_, pixels_);
  }
  std::span<const double> values() const noexcept { return data_; }

  /// Largest deviation of any column sum from 1.
  double column_sum_error() const noexcept;
  double max_abs_difference(const MembershipMatrix& other) const;
  /// Cluster with the largest membership at pixel n (lowest index on ties).
  std::size_t argmax(std::size_t n) const noexcept;

  bool operator==(const MembershipMatrix&) const = default;

 private:
  std::size_t clusters_ = 0;
  std::size_t pixels_ = 0;
  std::vector<double> data_;
};

struct SfcmConfig {
  std::size_t clusters = 4;
  double fuzziness = 2.0;        // L
  double membership_exp = 1.0;   // p
  double spatial_exp = 1.0;      // q; 0 gives plain FCM
  std::size_t window_radius = 2;
  double tol = 1e-4;
  std::size_t max_iter = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FcmStep {
  MembershipMatrix memberships;
  std::vector<double> centers;
};

/// One alternating update: centers from the current memberships, then
/// memberships from those centers. A pixel equal to a center belongs to it
/// with membership 1.
FcmStep fcm_iterate(const GrayImage& image, const MembershipMatrix& memberships, const SfcmConfig& config);

std::vector<double> fcm_centers(const GrayImage& image, const MembershipMatrix& memberships, double fuzziness);
MembershipMatrix fcm_memberships(const GrayImage& image, std::span<const double> centers, double fuzziness);

/// Mixes each membership with the membership mass of its neighbourhood:
/// u' = u^p h^q / sum_c u_c^p h_c^q, h = window sum with replicate borders.
MembershipMatrix spatial_refine(const MembershipMatrix& memberships, const SfcmConfig& config,
                                std::size_t width, std::size_t height);

double fcm_objective(const GrayImage& image, const MembershipMatrix& memberships, std::span<const double> centers,
                     double fuzziness);

MembershipMatrix random_memberships(std::size_t clusters, std::size_t pixels, std::uint64_t seed);

struct SfcmResult {
  MembershipMatrix memberships;
  std::vector<double> centers;
  std::size_t iterations = 0;
  /// J(U_t, V_t) after every iteration.
  std::vector<double> objective_history;
};

SfcmResult sfcm_run(const GrayImage& image, const SfcmConfig& config);
SfcmResult sfcm_run(const GrayImage& image, const SfcmConfig& config, MembershipMatrix initial);

/// Membership plane of the brightest cluster (lowest index on equal centers).
GrayImage tumor_membership_map(const MembershipMatrix& memberships, std::span<const double> centers,
                               std::size_t width, std::size_t height);

}  // namespace mammo
