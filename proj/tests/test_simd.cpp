#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mammo/simd.hpp"

using namespace mammo;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Relative agreement; reduction order differs between backends.
bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

TEST_CASE("scalar kernels against naive loops") {
  std::mt19937_64 rng(1);
  const auto a = random_vector(37, rng), b = random_vector(37, rng);
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  CHECK(close(simd::scalar::dot(a.data(), b.data(), a.size()), d));
  CHECK(close(simd::scalar::squared_distance(a.data(), b.data(), a.size()), s));

  auto y = b;
  simd::scalar::axpy(0.5, a.data(), y.data(), y.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == b[i] + 0.5 * a[i]);
}

TEST_CASE("avx2 kernels match scalar kernels") {
  if (!simd::backend_available(simd::Backend::Avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(2);
  // Lengths straddle the vector width and its remainders.
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 64u, 1000u}) {
    const auto a = random_vector(n, rng), b = random_vector(n, rng);
    CHECK(close(simd::avx2::dot(a.data(), b.data(), n), simd::scalar::dot(a.data(), b.data(), n)));
    CHECK(close(simd::avx2::squared_distance(a.data(), b.data(), n),
                simd::scalar::squared_distance(a.data(), b.data(), n)));

    auto y1 = b, y2 = b;
    simd::avx2::axpy(-1.25, a.data(), y1.data(), n);
    simd::scalar::axpy(-1.25, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));

    std::vector<double> nx1(n), ny1(n), nx2(n), ny2(n);
    auto px = a, py = b;
    if (n > 2) px[1] = py[1] = 0.0;  // exercise the eta floor
    simd::avx2::normalize_gradient(px.data(), py.data(), 1e-10, nx1.data(), ny1.data(), n);
    simd::scalar::normalize_gradient(px.data(), py.data(), 1e-10, nx2.data(), ny2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(close(nx1[i], nx2[i]));
      CHECK(close(ny1[i], ny2[i]));
    }
  }
  for (std::size_t k : {4u, 5u, 8u, 12u}) {
    const std::size_t stride = 23;
    const auto img = random_vector(stride * 20, rng);
    const double* a = img.data() + 3 * stride + 2;
    const double* b = img.data() + 7 * stride + 9;
    CHECK(close(simd::avx2::block_squared_distance(a, stride, b, stride, k, k),
                simd::scalar::block_squared_distance(a, stride, b, stride, k, k)));
  }
}

TEST_CASE("backend selection") {
  const auto initial = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  CHECK(simd::active_backend() == simd::Backend::Scalar);
  CHECK(simd::backend_name(simd::Backend::Scalar) == "scalar");
  if (simd::backend_available(simd::Backend::Avx2)) {
    simd::set_backend(simd::Backend::Avx2);
    CHECK(simd::active_backend() == simd::Backend::Avx2);
  } else {
    CHECK_THROWS(simd::set_backend(simd::Backend::Avx2));
  }
  simd::set_backend(initial);
}

TEST_CASE("dispatched kernels follow the active backend") {
  std::mt19937_64 rng(5);
  const auto a = random_vector(101, rng), b = random_vector(101, rng);
  const auto initial = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  CHECK(simd::dot(a, b) == simd::scalar::dot(a.data(), b.data(), a.size()));
  simd::set_backend(initial);
  CHECK(close(simd::dot(a, b), simd::scalar::dot(a.data(), b.data(), a.size())));
}
