#pragma once

// Data-parallel inner loops used by the convolution, dense, block-matching,
// level-set and spatial-clustering code. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2+FMA variant. The variant is chosen
// once at runtime from CPUID; MAMMO_SIMD=scalar|avx2 in the environment or
// set_backend() overrides it.

#include <cstddef>
#include <span>
#include <string_view>

namespace mammo::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;
bool backend_available(Backend b) noexcept;
Backend active_backend() noexcept;
/// Throws ArgumentError if the backend is not available on this CPU.
void set_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
/// Sum of squared differences between two rows x cols blocks of row-major
/// images with the given row strides.
double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept;
/// n = p / max(|p|, eta) componentwise over (px, py).
void normalize_gradient(std::span<const double> px, std::span<const double> py, double eta,
                        std::span<double> nx, std::span<double> ny) noexcept;

namespace scalar {
double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void normalize_gradient(const double* px, const double* py, double eta, double* nx, double* ny,
                        std::size_t n) noexcept;
}  // namespace scalar

namespace avx2 {
double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void normalize_gradient(const double* px, const double* py, double eta, double* nx, double* ny,
                        std::size_t n) noexcept;
}  // namespace avx2

}  // namespace mammo::simd
