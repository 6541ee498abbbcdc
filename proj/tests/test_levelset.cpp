#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/levelset.hpp"
#include "support.hpp"

using namespace mammo;

namespace {

// Straightforward re-derivation of one update: every derivative is a fresh
// central difference of a field sampled through a clamping accessor.
LevelSetField naive_step(const LevelSetField& f, const EdgeIndicator& g, const LevelSetConfig& cfg) {
  const auto w = static_cast<long>(f.width), h = static_cast<long>(f.height);
  auto clampr = [&](long r) { return std::min(std::max(r, 0L), h - 1); };
  auto clampc = [&](long c) { return std::min(std::max(c, 0L), w - 1); };
  auto phi = [&](long r, long c) { return f.phi[clampr(r) * w + clampc(c)]; };
  auto gg = [&](long r, long c) { return g.g[clampr(r) * w + clampc(c)]; };
  auto n = [&](long r, long c, int comp) {
    r = clampr(r);
    c = clampc(c);
    const double px = 0.5 * (phi(r, c + 1) - phi(r, c - 1));
    const double py = 0.5 * (phi(r + 1, c) - phi(r - 1, c));
    const double mag = std::max(std::sqrt(px * px + py * py), cfg.grad_floor);
    return (comp == 0 ? px : py) / mag;
  };
  LevelSetField out{f.width, f.height, std::vector<double>(f.phi.size())};
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) {
      const double lap = phi(r, c - 1) + phi(r, c + 1) + phi(r - 1, c) + phi(r + 1, c) - 4 * phi(r, c);
      const double kappa = 0.5 * (n(r, c + 1, 0) - n(r, c - 1, 0)) + 0.5 * (n(r + 1, c, 1) - n(r - 1, c, 1));
      const double div_gn = 0.5 * (gg(r, clampc(c + 1)) * n(r, c + 1, 0) - gg(r, clampc(c - 1)) * n(r, c - 1, 0)) +
                            0.5 * (gg(clampr(r + 1), c) * n(r + 1, c, 1) - gg(clampr(r - 1), c) * n(r - 1, c, 1));
      const double p = phi(r, c);
      const double d = std::abs(p) > cfg.epsilon ? 0.0 : (1 + std::cos(std::numbers::pi * p / cfg.epsilon)) / (2 * cfg.epsilon);
      out.phi[r * w + c] =
          p + cfg.tau * (cfg.mu * (lap - kappa) + cfg.lambda * d * div_gn + cfg.nu * gg(r, c) * d);
    }
  return out;
}

LevelSetField signed_distance_disk(std::size_t size, double radius) {
  LevelSetField f{size, size, std::vector<double>(size * size)};
  const double c = static_cast<double>(size) / 2.0;
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t col = 0; col < size; ++col)
      f.phi[r * size + col] = radius - std::hypot(static_cast<double>(r) - c, static_cast<double>(col) - c);
  return f;
}

EdgeIndicator flat_edges(std::size_t w, std::size_t h) { return {w, h, std::vector<double>(w * h, 1.0)}; }

}  // namespace

TEST_CASE("config defaults and validation") {
  const LevelSetConfig c;
  CHECK(c.epsilon == 1.5);
  CHECK(c.b0 == 0.5);
  CHECK(c.tau == 5.0);
  CHECK(c.mu == 0.04);
  CHECK(c.iterations == 200);
  CHECK(c.tau * c.mu < 0.25);
  LevelSetConfig bad;
  bad.mu = 0.05;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = {};
  bad.b0 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = {};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("binarize membership") {
  const GrayImage r(3, 1, std::vector<double>{0.5, 0.4999, 1.0});
  const auto m = binarize_membership(r, 0.5);
  CHECK(m.at(0, 0));
  CHECK_FALSE(m.at(0, 1));
  CHECK(m.at(0, 2));
  CHECK(binarize_membership(GrayImage(4, 4), 0.5).count() == 0);
  const auto rnd = testing::random_image(9, 9, 3);
  const auto b = binarize_membership(rnd, 0.3);
  for (std::size_t i = 0; i < rnd.size(); ++i) CHECK(b[i] == (rnd.pixels()[i] >= 0.3));
  CHECK_THROWS_AS(binarize_membership(rnd, 0.0), ArgumentError);
  CHECK_THROWS_AS(binarize_membership(rnd, 1.5), ArgumentError);
}

TEST_CASE("init_phi and extract_mask") {
  BinaryMask m(2, 1);
  m.set(0, 0, true);
  const auto f = init_phi(m, 1.5);
  CHECK(f.phi[0] == 3.0);
  CHECK(f.phi[1] == -3.0);

  std::mt19937_64 rng(4);
  std::bernoulli_distribution bit(0.3);
  for (int t = 0; t < 100; ++t) {
    BinaryMask b(11, 7);
    for (std::size_t i = 0; i < b.size(); ++i) b.set(i, bit(rng));
    const double eps = 0.1 + 0.05 * t;
    CHECK(extract_mask(init_phi(b, eps)) == b);
  }

  LevelSetField neg{3, 3, std::vector<double>(9, -0.1)};
  CHECK(extract_mask(neg).count() == 0);
  LevelSetField rnd{5, 5, {}};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 25; ++i) rnd.phi.push_back(u(rng));
  const auto e = extract_mask(rnd);
  for (std::size_t i = 0; i < 25; ++i) CHECK(e[i] == (rnd.phi[i] > 0.0));
}

TEST_CASE("dirac") {
  CHECK(dirac(0.0, 1.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(dirac(1.5, 1.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dirac(1.5000001, 1.5) == 0.0);
  for (double x : {0.1, 0.7, 1.2, 2.0}) CHECK(dirac(x, 1.5) == dirac(-x, 1.5));
  for (double eps : {0.5, 1.5, 3.0}) {
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = -eps + 2.0 * eps * i / n;
      sum += (i == 0 || i == n ? 0.5 : 1.0) * dirac(x, eps);
    }
    CHECK(std::abs(sum * 2.0 * eps / n - 1.0) < 1e-3);
  }
}

TEST_CASE("edge indicator") {
  const auto flat = edge_indicator(GrayImage(10, 10, 0.3), 1.5);
  for (double v : flat.g) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  GrayImage step(20, 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 10; c < 20; ++c) step.at(r, c) = 1.0;
  const auto e = edge_indicator(step, 1.0);
  // Along a row g dips at the step between columns 9 and 10.
  const double* row = e.g.data() + 2 * 20;
  CHECK(row[9] < row[5]);
  CHECK(row[10] < row[15]);
  CHECK(std::min(row[9], row[10]) == *std::min_element(row, row + 20));
  for (double v : e.g) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("evolve_step matches the naive discretization") {
  const auto img = testing::noisy_disk(24, 6, 0.05, 2).image;
  const auto g = edge_indicator(img, 1.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  LevelSetField f{24, 24, {}};
  for (int i = 0; i < 24 * 24; ++i) f.phi.push_back(u(rng));
  LevelSetConfig cfg;
  const auto fast = evolve_step(f, g, cfg);
  const auto ref = naive_step(f, g, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.phi.size(); ++i) worst = std::max(worst, std::abs(fast.phi[i] - ref.phi[i]));
  CHECK(worst < 1e-12);

  // A field far from its zero set: delta vanishes and a plane has zero curvature.
  LevelSetField plane{16, 16, {}};
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) plane.phi.push_back(10.0 + 0.5 * static_cast<double>(c));
  const auto moved = evolve_step(plane, flat_edges(16, 16), cfg);
  for (std::size_t r = 1; r < 15; ++r)
    for (std::size_t c = 1; c < 15; ++c) CHECK(moved.phi[r * 16 + c] == doctest::Approx(plane.phi[r * 16 + c]).epsilon(1e-14));

  LevelSetField bad{4, 4, std::vector<double>(16, 0.0)};
  bad.phi[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(evolve_step(bad, flat_edges(4, 4), cfg), NumericalError);
  CHECK_THROWS_AS(evolve_step(bad, flat_edges(3, 4), cfg), ArgumentError);
}

TEST_CASE("balloon force expands a small disk") {
  LevelSetConfig cfg;
  cfg.lambda = 0.0;
  cfg.nu = 1.5;
  auto f = init_phi(testing::disk_mask(40, 20, 20, 5), cfg.epsilon);
  const auto g = flat_edges(40, 40);
  for (int i = 0; i < 10; ++i) f = evolve_step(f, g, cfg);
  const auto grown = extract_mask(f);
  const auto start = testing::disk_mask(40, 20, 20, 5);
  CHECK(grown.count() > start.count());
  for (std::size_t i = 0; i < start.size(); ++i)
    if (start[i]) CHECK(grown[i]);
}

TEST_CASE("pure regularization keeps the sign pattern") {
  LevelSetConfig cfg;
  cfg.lambda = 0.0;
  cfg.nu = 0.0;
  cfg.iterations = 50;
  cfg.early_stop_frac = 0.0;
  const auto phi0 = signed_distance_disk(64, 18);
  const auto before = extract_mask(phi0);
  const auto res = evolve_from(phi0, flat_edges(64, 64), cfg);
  CHECK(res.iterations == 50);
  const auto after = extract_mask(res.phi);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != after[i];
  CHECK(static_cast<double>(changed) < 0.01 * static_cast<double>(before.size()));
}

TEST_CASE("evolve") {
  const auto p = testing::noisy_disk(64, 16, 0.05, 9);
  GrayImage seed(64, 64);
  for (std::size_t i = 0; i < seed.size(); ++i) seed.pixels()[i] = p.truth[i] ? 0.9 : 0.1;

  LevelSetConfig zero;
  zero.iterations = 0;
  const auto init = evolve(seed, p.image, zero);
  CHECK(init.iterations == 0);
  CHECK(init.phi.phi == init_phi(p.truth, zero.epsilon).phi);

  const LevelSetConfig cfg;
  const auto a = evolve(seed, p.image, cfg);
  const auto b = evolve(seed, p.image, cfg);
  CHECK(a.phi.phi == b.phi.phi);
  CHECK(a.iterations <= 200);
  CHECK(a.history.size() == a.iterations);
  CHECK(dice(extract_mask(a.phi), p.truth) >= 0.95);
  CHECK_THROWS_AS(evolve(GrayImage(5, 5), p.image, cfg), ArgumentError);
}
