#include <atomic>
#include <cstdlib>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/simd.hpp"

namespace mammo::simd {
namespace {

struct KernelTable {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
  double (*squared_distance)(const double*, const double*, std::size_t) noexcept;
  double (*block_squared_distance)(const double*, std::size_t, const double*, std::size_t, std::size_t,
                                   std::size_t) noexcept;
  void (*normalize_gradient)(const double*, const double*, double, double*, double*, std::size_t) noexcept;
};

constexpr KernelTable kScalar{Backend::Scalar, scalar::dot, scalar::axpy, scalar::squared_distance,
                              scalar::block_squared_distance, scalar::normalize_gradient};
constexpr KernelTable kAvx2{Backend::Avx2, avx2::dot, avx2::axpy, avx2::squared_distance,
                            avx2::block_squared_distance, avx2::normalize_gradient};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("MAMMO_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return &kScalar;
    if (v == "avx2" && cpu_has_avx2()) return &kAvx2;
  }
  return cpu_has_avx2() ? &kAvx2 : &kScalar;
}

std::atomic<const KernelTable*>& table() noexcept {
  static std::atomic<const KernelTable*> t{initial_table()};
  return t;
}

inline const KernelTable& current() noexcept { return *table().load(std::memory_order_relaxed); }

}  // namespace

std::string_view backend_name(Backend b) noexcept { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) noexcept { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() noexcept { return current().backend; }

void set_backend(Backend b) {
  if (!backend_available(b)) throw ArgumentError("SIMD backend not supported on this CPU");
  table().store(b == Backend::Avx2 ? &kAvx2 : &kScalar, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return current().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  current().axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return current().squared_distance(a.data(), b.data(), a.size());
}

double block_squared_distance(const double* a, std::size_t a_stride, const double* b,
                              std::size_t b_stride, std::size_t rows, std::size_t cols) noexcept {
  return current().block_squared_distance(a, a_stride, b, b_stride, rows, cols);
}

void normalize_gradient(std::span<const double> px, std::span<const double> py, double eta,
                        std::span<double> nx, std::span<double> ny) noexcept {
  current().normalize_gradient(px.data(), py.data(), eta, nx.data(), ny.data(), px.size());
}

}  // namespace mammo::simd
