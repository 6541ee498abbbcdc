#include "mammo/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"
#include "mammo/simd.hpp"

namespace mammo {

void LevelSetConfig::validate() const {
  if (!(epsilon > 0.0)) throw ArgumentError("LevelSetConfig: epsilon must be positive");
  if (!(b0 > 0.0 && b0 < 1.0)) throw ArgumentError("LevelSetConfig: b0 must lie in (0,1)");
  if (!(tau > 0.0) || !(mu >= 0.0)) throw ArgumentError("LevelSetConfig: tau must be positive, mu >= 0");
  if (!(tau * mu < 0.25)) throw ArgumentError("LevelSetConfig: tau*mu must be < 0.25");
  if (!(smoothing_sigma > 0.0)) throw ArgumentError("LevelSetConfig: smoothing_sigma must be positive");
  if (!(grad_floor > 0.0)) throw ArgumentError("LevelSetConfig: grad_floor must be positive");
  if (!(early_stop_frac >= 0.0)) throw ArgumentError("LevelSetConfig: early_stop_frac must be >= 0");
}

BinaryMask binarize_membership(const GrayImage& r_k, double b0) {
  if (!(b0 > 0.0 && b0 < 1.0)) throw ArgumentError("binarize_membership: b0 must lie in (0,1)");
  BinaryMask out(r_k.width(), r_k.height());
  const auto px = r_k.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) out.set(i, px[i] >= b0);
  return out;
}

LevelSetField init_phi(const BinaryMask& b_k, double epsilon) {
  LevelSetField f{b_k.width(), b_k.height(), std::vector<double>(b_k.size())};
  for (std::size_t i = 0; i < b_k.size(); ++i) f.phi[i] = -4.0 * epsilon * (0.5 - (b_k[i] ? 1.0 : 0.0));
  return f;
}

double dirac(double x, double epsilon) noexcept {
  if (std::abs(x) > epsilon) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * x / epsilon)) / (2.0 * epsilon);
}

EdgeIndicator edge_indicator(const GrayImage& image, double sigma) {
  const GrayImage smooth = gaussian_blur(image, sigma);
  const std::size_t w = image.width(), h = image.height();
  EdgeIndicator out{w, h, std::vector<double>(w * h)};
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const auto sr = static_cast<std::ptrdiff_t>(r), sc = static_cast<std::ptrdiff_t>(c);
      const double gx = 0.5 * 255.0 * (smooth.clamped(sr, sc + 1) - smooth.clamped(sr, sc - 1));
      const double gy = 0.5 * 255.0 * (smooth.clamped(sr + 1, sc) - smooth.clamped(sr - 1, sc));
      out.g[r * w + c] = 1.0 / (1.0 + gx * gx + gy * gy);
    }
  }
  return out;
}

namespace {

// Central differences with replicate borders.
void gradient(const std::vector<double>& f, std::size_t w, std::size_t h, std::vector<double>& fx,
              std::vector<double>& fy) {
  fx.resize(w * h);
  fy.resize(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == h ? r : r + 1;
    const double* row = f.data() + r * w;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = c + 1 == w ? c : c + 1;
      fx[r * w + c] = 0.5 * (row[right] - row[left]);
      fy[r * w + c] = 0.5 * (f[down * w + c] - f[up * w + c]);
    }
  }
}

}  // namespace

LevelSetField evolve_step(const LevelSetField& phi, const EdgeIndicator& g, const LevelSetConfig& config) {
  if (g.width != phi.width || g.height != phi.height) throw ArgumentError("evolve_step: edge map size mismatch");
  if (!(config.tau * config.mu < 0.25)) throw ArgumentError("evolve_step: tau*mu must be < 0.25");
  const std::size_t w = phi.width, h = phi.height, n = w * h;

  std::vector<double> px, py, nx(n), ny(n);
  gradient(phi.phi, w, h, px, py);
  simd::normalize_gradient(px, py, config.grad_floor, nx, ny);

  std::vector<double> gnx(nx), gny(ny);
  for (std::size_t i = 0; i < n; ++i) {
    gnx[i] *= g.g[i];
    gny[i] *= g.g[i];
  }
  std::vector<double> nxx, nxy, nyx, nyy, gxx, gxy, gyx, gyy;
  gradient(nx, w, h, nxx, nxy);
  gradient(ny, w, h, nyx, nyy);
  gradient(gnx, w, h, gxx, gxy);
  gradient(gny, w, h, gyx, gyy);

  LevelSetField out{w, h, std::vector<double>(n)};
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == h ? r : r + 1;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = c + 1 == w ? c : c + 1;
      const std::size_t i = r * w + c;
      const double p = phi.phi[i];
      const double lap = phi.phi[r * w + left] + phi.phi[r * w + right] + phi.phi[up * w + c] +
                         phi.phi[down * w + c] - 4.0 * p;
      const double kappa = nxx[i] + nyy[i];
      const double div_gn = gxx[i] + gyy[i];
      const double delta = dirac(p, config.epsilon);
      const double regularization = lap - kappa;
      const double edge = config.lambda * delta * div_gn + config.nu * g.g[i] * delta;
      const double next = p + config.tau * (config.mu * regularization + edge);
      if (!std::isfinite(next)) throw NumericalError("level-set evolution diverged (non-finite phi)");
      out.phi[i] = next;
    }
  }
  return out;
}

BinaryMask extract_mask(const LevelSetField& phi) {
  BinaryMask out(phi.width, phi.height);
  for (std::size_t i = 0; i < phi.phi.size(); ++i) out.set(i, phi.phi[i] > 0.0);
  return out;
}

EvolveResult evolve_from(LevelSetField phi, const EdgeIndicator& g, const LevelSetConfig& config) {
  config.validate();
  EvolveResult out;
  const std::size_t n = phi.phi.size();
  const double stop_pixels = config.early_stop_frac * static_cast<double>(n);
  std::size_t quiet = 0;
  BinaryMask mask = extract_mask(phi);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    LevelSetField next = evolve_step(phi, g, config);
    BinaryMask next_mask = extract_mask(next);
    std::size_t changed = 0;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      changed += mask[i] != next_mask[i];
      change += std::abs(next.phi[i] - phi.phi[i]);
    }
    phi = std::move(next);
    mask = std::move(next_mask);
    out.iterations = it + 1;
    out.history.push_back({it + 1, mask.count(), n ? change / static_cast<double>(n) : 0.0});
    if (config.early_stop_frac > 0.0) {
      quiet = static_cast<double>(changed) < stop_pixels ? quiet + 1 : 0;
      if (quiet >= config.early_stop_patience) break;
    }
  }
  out.phi = std::move(phi);
  return out;
}

EvolveResult evolve(const GrayImage& r_k, const GrayImage& image, const LevelSetConfig& config) {
  config.validate();
  if (r_k.width() != image.width() || r_k.height() != image.height()) {
    throw ArgumentError("evolve: membership map and image dimensions differ");
  }
  LevelSetField phi = init_phi(binarize_membership(r_k, config.b0), config.epsilon);
  return evolve_from(std::move(phi), edge_indicator(image, config.smoothing_sigma), config);
}

}  // namespace mammo
