#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mammo/image.hpp"

namespace mammo {

/// Real field over the image grid; positive inside the segmented region.
struct LevelSetField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> phi;

  double at(std::size_t r, std::size_t c) const noexcept { return phi[r * width + c]; }
};

struct LevelSetConfig {
  double epsilon = 1.5;
  double b0 = 0.5;
  double tau = 5.0;
  double mu = 0.04;
  double lambda = 5.0;
  double nu = 1.5;
  std::size_t iterations = 200;
  double smoothing_sigma = 1.5;
  double grad_floor = 1e-10;
  double early_stop_frac = 1e-4;  // 0 disables early stopping
  std::size_t early_stop_patience = 5;

  void validate() const;
};

/// g = 1 / (1 + |grad(G_sigma * I)|^2), gradient taken on the 8-bit scale.
struct EdgeIndicator {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> g;
};

BinaryMask binarize_membership(const GrayImage& r_k, double b0);

/// phi = -4 eps (0.5 - B): +2 eps inside, -2 eps outside.
LevelSetField init_phi(const BinaryMask& b_k, double epsilon);

/// Regularized Dirac delta, zero outside [-eps, eps].
double dirac(double x, double epsilon) noexcept;

EdgeIndicator edge_indicator(const GrayImage& image, double sigma);

/// phi + tau * (mu * (lap(phi) - kappa) + lambda * delta(phi) * div(g n) + nu * g * delta(phi))
/// with n = grad(phi) / max(|grad(phi)|, eta), central differences, replicate borders.
LevelSetField evolve_step(const LevelSetField& phi, const EdgeIndicator& g, const LevelSetConfig& config);

struct LevelSetDiagnostics {
  std::size_t iteration = 0;
  std::size_t area = 0;  // pixels with phi > 0
  double mean_abs_change = 0.0;
};

struct EvolveResult {
  LevelSetField phi;
  std::size_t iterations = 0;
  std::vector<LevelSetDiagnostics> history;
};

EvolveResult evolve(const GrayImage& r_k, const GrayImage& image, const LevelSetConfig& config);
EvolveResult evolve_from(LevelSetField phi, const EdgeIndicator& g, const LevelSetConfig& config);

BinaryMask extract_mask(const LevelSetField& phi);

}  // namespace mammo
