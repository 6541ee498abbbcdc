#include <algorithm>
#include <cmath>

#include "mammo/simd.hpp"

namespace mammo::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) acc += squared_distance(a + r * a_stride, b + r * b_stride, cols);
  return acc;
}

void normalize_gradient(const double* px, const double* py, double eta, double* nx, double* ny,
                        std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::max(std::sqrt(px[i] * px[i] + py[i] * py[i]), eta);
    nx[i] = px[i] / mag;
    ny[i] = py[i] / mag;
  }
}

}  // namespace mammo::simd::scalar
