// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <algorithm>
#include <cmath>

#include "mammo/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace mammo::simd::avx2 {
namespace {

inline double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept {
  __m256d acc = _mm256_setzero_pd();
  double tail = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a + r * a_stride;
    const double* br = b + r * b_stride;
    std::size_t i = 0;
    for (; i + 4 <= cols; i += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(ar + i), _mm256_loadu_pd(br + i));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    for (; i < cols; ++i) {
      const double d = ar[i] - br[i];
      tail += d * d;
    }
  }
  return hsum(acc) + tail;
}

void normalize_gradient(const double* px, const double* py, double eta, double* nx, double* ny,
                        std::size_t n) noexcept {
  const __m256d veta = _mm256_set1_pd(eta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(px + i);
    const __m256d y = _mm256_loadu_pd(py + i);
    const __m256d mag = _mm256_max_pd(_mm256_sqrt_pd(_mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y))), veta);
    _mm256_storeu_pd(nx + i, _mm256_div_pd(x, mag));
    _mm256_storeu_pd(ny + i, _mm256_div_pd(y, mag));
  }
  for (; i < n; ++i) {
    const double mag = std::max(std::sqrt(px[i] * px[i] + py[i] * py[i]), eta);
    nx[i] = px[i] / mag;
    ny[i] = py[i] / mag;
  }
}

}  // namespace mammo::simd::avx2

#else

// Non-x86 builds: the entry points exist but backend_available(Avx2) is false,
// so they are never dispatched to.
namespace mammo::simd::avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept { return scalar::dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept { scalar::axpy(alpha, x, y, n); }
double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  return scalar::squared_distance(a, b, n);
}
double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept {
  return scalar::block_squared_distance(a, a_stride, b, b_stride, rows, cols);
}
void normalize_gradient(const double* px, const double* py, double eta, double* nx, double* ny,
                        std::size_t n) noexcept {
  scalar::normalize_gradient(px, py, eta, nx, ny, n);
}
}  // namespace mammo::simd::avx2

#endif
