#include <doctest.h>

#include <cmath>
#include <functional>
#include <json.hpp>
#include <random>
#include <vector>

#include "mammo/cnn/augment.hpp"
#include "mammo/cnn/checkpoint.hpp"
#include "mammo/cnn/network.hpp"
#include "mammo/cnn/train.hpp"
#include "mammo/errors.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace mammo;
using namespace mammo::cnn;
using namespace testing;

namespace {

std::vector<Sample> blob_samples(std::size_t per_class, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t label = i % 2;
    GrayImage img(size, size);
    const double cx = label ? 0.7 * size : 0.3 * size;
    for (std::size_t r = 0; r < size; ++r)
      for (std::size_t c = 0; c < size; ++c) {
        const double d = std::hypot(c - cx, r - 0.5 * size);
        img.at(r, c) = std::clamp((d < 0.2 * size ? 0.8 : 0.2) + noise(rng), 0.0, 1.0);
      }
    out.push_back({img, label});
  }
  return out;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({2, 3, 4, 5}, 1.5);
  CHECK(t.size() == 120);
  CHECK(element_count(t.shape()) == 120);
  t.at(1, 2, 3, 4) = 7.0;
  CHECK(t[119] == 7.0);
  CHECK(t.reshaped({2, 60}).dim(1) == 60);
  CHECK_THROWS_AS(t.reshaped({7}), ArgumentError);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), ArgumentError);
}

TEST_CASE("conv2d forward") {
  std::mt19937_64 rng(1);
  const auto x = random_tensor({1, 2, 5, 5}, rng);
  SUBCASE("1x1 identity kernel") {
    Tensor w({2, 2, 1, 1});
    w.at(0, 0, 0, 0) = 1.0;
    w.at(1, 1, 0, 0) = 1.0;
    CHECK(conv2d(x, w, Tensor({2}), 1, 0) == x);
  }
  SUBCASE("zero kernel gives bias") {
    const Tensor bias({3}, std::vector<double>{0.5, -1.0, 2.0});
    const auto y = conv2d(x, Tensor({3, 2, 3, 3}), bias, 2, 1);
    CHECK(y.shape() == Shape{1, 3, 3, 3});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 9; ++i) CHECK(y[c * 9 + i] == bias[c]);
  }
  SUBCASE("matches a direct six-loop correlation") {
    const auto w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    for (std::size_t stride : {1u, 2u})
      for (std::size_t pad : {0u, 1u, 2u}) {
        const auto y = conv2d(x, w, b, stride, pad);
        const std::size_t oh = (5 + 2 * pad - 3) / stride + 1;
        REQUIRE(y.shape() == Shape{1, 3, oh, oh});
        for (std::size_t o = 0; o < 3; ++o)
          for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t c = 0; c < oh; ++c) {
              double s = b[o];
              for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t ky = 0; ky < 3; ++ky)
                  for (std::size_t kx = 0; kx < 3; ++kx) {
                    const long yy = static_cast<long>(r * stride + ky) - static_cast<long>(pad);
                    const long xx = static_cast<long>(c * stride + kx) - static_cast<long>(pad);
                    if (yy < 0 || xx < 0 || yy >= 5 || xx >= 5) continue;
                    s += w.at(o, i, ky, kx) * x.at(0, i, yy, xx);
                  }
              CHECK(y.at(0, o, r, c) == doctest::Approx(s).epsilon(1e-13));
            }
      }
  }
  CHECK_THROWS_AS(conv2d(x, Tensor({3, 1, 3, 3}), Tensor({3}), 1, 0), ArgumentError);
}

TEST_CASE("conv2d gradients") {
  std::mt19937_64 rng(2);
  auto x = random_tensor({1, 3, 8, 8}, rng);
  auto w = random_tensor({4, 3, 3, 3}, rng);
  auto b = random_tensor({4}, rng);
  for (std::size_t stride : {1u, 2u}) {
    const std::size_t pad = 1;
    const auto y = conv2d(x, w, b, stride, pad);
    const auto proj = random_tensor(y.shape(), rng);
    const auto g = conv2d_backward(x, w, stride, pad, proj);
    auto f = [&] { return weighted_sum(conv2d(x, w, b, stride, pad), proj); };
    CHECK(max_relative_error(x, f, g.input) < 1e-4);
    CHECK(max_relative_error(w, f, g.weights) < 1e-4);
    CHECK(max_relative_error(b, f, g.bias) < 1e-4);
  }
}

TEST_CASE("maxpool") {
  const Tensor flat({1, 1, 7, 7}, 0.3);
  const auto p = maxpool2d(flat);
  CHECK(p.output.shape() == Shape{1, 1, 3, 3});
  for (double v : p.output.values()) CHECK(v == 0.3);
  // Ties resolve to the first element of each window.
  CHECK(p.argmax[0] == 0);
  CHECK(p.argmax[1] == 2);

  Tensor ramp({1, 1, 7, 7});
  for (std::size_t i = 0; i < 49; ++i) ramp[i] = static_cast<double>(i);
  const auto pr = maxpool2d(ramp);
  CHECK(pr.output.at(0, 0, 0, 0) == 16.0);
  CHECK(pr.output.at(0, 0, 2, 2) == 48.0);

  std::mt19937_64 rng(3);
  auto x = separated_tensor({2, 2, 7, 7}, rng);
  const auto proj = random_tensor({2, 2, 3, 3}, rng);
  const auto fwd = maxpool2d(x);
  const auto gx = maxpool2d_backward(x.shape(), fwd.argmax, proj);
  auto f = [&] { return weighted_sum(maxpool2d(x).output, proj); };
  CHECK(max_relative_error(x, f, gx) < 1e-4);

  CHECK_THROWS_AS(maxpool2d(Tensor({1, 1, 2, 5})), ArgumentError);
}

TEST_CASE("batchnorm") {
  std::mt19937_64 rng(4);
  const auto x = random_tensor({4, 3, 5, 5}, rng, -2.0, 3.0);
  SUBCASE("train mode standardizes each channel") {
    BatchNormParams p(3);
    const auto y = batchnorm2d(x, p, Mode::Train);
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0.0, v = 0.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) m += y[(n * 3 + c) * 25 + i];
      m /= 100.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) v += std::pow(y[(n * 3 + c) * 25 + i] - m, 2);
      v /= 100.0;
      CHECK(std::abs(m) < 1e-6);
      CHECK(std::abs(v - 1.0) < 1e-4);  // eps in the denominator keeps it just below 1
    }
  }
  SUBCASE("running statistics follow the momentum rule") {
    BatchNormParams p(3);
    batchnorm2d(x, p, Mode::Train);
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0.0, v = 0.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) m += x[(n * 3 + c) * 25 + i];
      m /= 100.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) v += std::pow(x[(n * 3 + c) * 25 + i] - m, 2);
      CHECK(p.running_mean[c] == doctest::Approx(0.1 * m).epsilon(1e-12));
      CHECK(p.running_var[c] == doctest::Approx(0.9 + 0.1 * v / 99.0).epsilon(1e-12));
    }
    const auto y = batchnorm2d(x, p, Mode::Infer);
    CHECK(y[0] == doctest::Approx((x[0] - p.running_mean[0]) / std::sqrt(p.running_var[0] + 1e-5)).epsilon(1e-12));
  }
  SUBCASE("gamma zero gives beta") {
    BatchNormParams p(3);
    p.gamma.fill(0.0);
    p.beta = Tensor({3}, std::vector<double>{0.1, 0.2, 0.3});
    const auto y = batchnorm2d(x, p, Mode::Train);
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t c = 0; c < 3; ++c) CHECK(y.at(n, c, 2, 2) == p.beta[c]);
  }
  SUBCASE("batch of one is rejected in train mode") {
    BatchNormParams p(3);
    CHECK_THROWS_AS(batchnorm2d(Tensor({1, 3, 2, 2}), p, Mode::Train), ArgumentError);
  }
  SUBCASE("gradients") {
    BatchNormParams p(3);
    auto xx = x;
    p.gamma = random_tensor({3}, rng, 0.5, 1.5);
    p.beta = random_tensor({3}, rng);
    const auto proj = random_tensor(x.shape(), rng);
    BatchNormCache cache;
    batchnorm2d(xx, p, Mode::Train, &cache);
    const auto g = batchnorm2d_backward(p, cache, proj);
    auto f = [&] {
      BatchNormParams q = p;
      return weighted_sum(batchnorm2d(xx, q, Mode::Train), proj);
    };
    CHECK(max_relative_error(xx, f, g.input) < 1e-4);
    CHECK(max_relative_error(p.gamma, f, g.gamma) < 1e-4);
    CHECK(max_relative_error(p.beta, f, g.beta) < 1e-4);
  }
}

TEST_CASE("dense and relu") {
  std::mt19937_64 rng(5);
  auto x = random_tensor({3, 4}, rng);
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  CHECK(dense(x, eye, Tensor({4})) == x);
  const Tensor b({2}, std::vector<double>{1.0, -2.0});
  const auto z = dense(x, Tensor({2, 4}), b);
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(z[n * 2] == 1.0);
    CHECK(z[n * 2 + 1] == -2.0);
  }
  CHECK_THROWS_AS(dense(x, Tensor({2, 5}), b), ArgumentError);

  auto w = random_tensor({2, 4}, rng);
  auto bb = random_tensor({2}, rng);
  const auto proj = random_tensor({3, 2}, rng);
  const auto g = dense_backward(x, w, proj);
  auto f = [&] { return weighted_sum(dense(x, w, bb), proj); };
  CHECK(max_relative_error(x, f, g.input) < 1e-4);
  CHECK(max_relative_error(w, f, g.weights) < 1e-4);
  CHECK(max_relative_error(bb, f, g.bias) < 1e-4);

  auto r = separated_tensor({2, 3, 4, 4}, rng);
  const auto rp = random_tensor(r.shape(), rng);
  auto fr = [&] { return weighted_sum(relu(r), rp); };
  CHECK(max_relative_error(r, fr, relu_backward(r, rp)) < 1e-4);
}

TEST_CASE("softmax and cross entropy") {
  const std::vector<double> zero{0.0, 0.0};
  const auto p0 = softmax_predict(zero);
  CHECK(p0.probabilities[0] == 0.5);
  CHECK(p0.label == 0);

  const std::vector<double> z{1.0, 3.0};
  const auto p = softmax_predict(z);
  const double e2 = std::exp(2.0);
  CHECK(p.probabilities[0] == doctest::Approx(1.0 / (1.0 + e2)).epsilon(1e-15));
  CHECK(p.probabilities[1] == doctest::Approx(e2 / (1.0 + e2)).epsilon(1e-15));
  CHECK(p.probabilities[0] == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(p.label == 1);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> l{u(rng), u(rng), u(rng)};
    const auto a = softmax_predict(l);
    double s = 0.0;
    for (double v : a.probabilities) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
    for (auto& v : l) v += 123.0;
    const auto b = softmax_predict(l);
    CHECK(b.label == a.label);
    for (std::size_t i = 0; i < 3; ++i) CHECK(b.probabilities[i] == doctest::Approx(a.probabilities[i]).epsilon(1e-12));
  }

  CHECK(cross_entropy(std::vector<double>{0.0, 1.0}, 1).loss == 0.0);
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, 0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cross_entropy(std::vector<double>{1.0, 0.0}, 1).loss == doctest::Approx(-std::log(1e-12)));

  Tensor logits({3}, std::vector<double>{0.3, -1.2, 2.0});
  const auto pred = softmax_predict(logits.values());
  const auto ce = cross_entropy(pred.probabilities, 2);
  auto f = [&] { return cross_entropy(softmax_predict(logits.values()).probabilities, 2).loss; };
  CHECK(max_relative_error(logits, f, Tensor({3}, ce.grad_logits)) < 1e-4);
}

TEST_CASE("momentum SGD") {
  Tensor w({2}, std::vector<double>{1.0, -1.0});
  Tensor g({2});
  SgdOptimizer still(0.1, 0.9);
  still.step(std::vector<ParamRef>{{"w", &w, &g}});
  CHECK(w[0] == 1.0);

  SgdOptimizer plain(0.1, 0.0);
  g[0] = 2.0;
  plain.step(std::vector<ParamRef>{{"w", &w, &g}});
  CHECK(w[0] == doctest::Approx(0.8).epsilon(1e-15));

  Tensor v({1}, std::vector<double>{0.0});
  Tensor gv({1}, std::vector<double>{1.0});
  SgdOptimizer mom(0.01, 0.9);
  const std::vector<ParamRef> refs{{"v", &v, &gv}};
  mom.step(refs);  // velocity 1, value -0.01
  gv[0] = 0.5;
  mom.step(refs);  // velocity 0.9 + 0.5 = 1.4, value -0.01 - 0.014
  CHECK(v[0] == doctest::Approx(-0.024).epsilon(1e-14));
}

TEST_CASE("architecture shape algebra") {
  CHECK(NetworkConfig::full().output_shape(3) == Shape{3, 2});
  CHECK(NetworkConfig::desk().output_shape(2) == Shape{2, 2});
  CHECK(NetworkConfig::full().input_size == 256);
  CHECK(NetworkConfig::desk().input_size == 64);
  CHECK(NetworkConfig::full().feature_dim == 300);
  auto bad = NetworkConfig::desk();
  bad.input_size = 16;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("whole-network gradients") {
  std::mt19937_64 rng(7);
  Network net(tiny_config(), 3);
  const auto x = random_tensor({3, 1, 12, 12}, rng);
  CHECK(network_gradient_error(net, x, {0, 1, 1}) < 1e-4);
}

TEST_CASE("features, prediction and ensembles") {
  Network net(NetworkConfig::desk(), 5);
  const auto a = testing::random_image(64, 64, 1), b = testing::random_image(64, 64, 2);
  const auto fa = extract_features(net, a);
  CHECK(fa.size() == 300);
  CHECK(extract_features(net, a) == fa);
  CHECK_FALSE(extract_features(net, b) == fa);

  const auto pa = predict(net, a);
  CHECK(pa.probabilities.size() == 2);
  CHECK(std::abs(pa.probabilities[0] + pa.probabilities[1] - 1.0) < 1e-12);

  std::vector<Network> two{Network(NetworkConfig::desk(), 1), Network(NetworkConfig::desk(), 2)};
  const auto p1 = predict(two[0], a), p2 = predict(two[1], a);
  const auto e = ensemble_predict(two, a);
  CHECK(e.probabilities[1] == doctest::Approx(0.5 * (p1.probabilities[1] + p2.probabilities[1])).epsilon(1e-14));
  if (p1.label != p2.label) CHECK(e.label == 0);
  else CHECK(e.label == p1.label);
}

TEST_CASE("checkpoint round trip") {
  Network net(tiny_config(), 9);
  std::mt19937_64 rng(8);
  const auto x = random_tensor({2, 1, 12, 12}, rng);
  net.forward(x, Mode::Train);  // move running statistics off their defaults
  const auto bytes = save_checkpoint(net);
  CHECK(std::equal(bytes.begin(), bytes.begin() + 8, kCheckpointMagic));
  Network back = load_checkpoint(bytes);
  CHECK(back.config() == net.config());
  CHECK(save_checkpoint(back) == bytes);
  CHECK(back.forward(x, Mode::Infer) == net.forward(x, Mode::Infer));

  auto broken = bytes;
  broken[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint(broken), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS(load_checkpoint(truncated));
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS(load_checkpoint(trailing));
  auto version = bytes;
  version[8] = 99;
  CHECK_THROWS_AS(load_checkpoint(version), FormatError);

  const auto dir = testing::scratch_dir("checkpoint");
  save_checkpoint_file(net, dir / "m.bin");
  auto reloaded = load_checkpoint_file(dir / "m.bin");
  CHECK(save_checkpoint(reloaded) == bytes);
}

TEST_CASE("augmentation") {
  const auto img = testing::random_image(80, 70, 3);
  SUBCASE("neutral parameters reduce to resize and center crop") {
    const auto out = apply_augmentation(img, AugmentParams{}, 64, 0.5);
    const auto ref = resize_center_crop(img, 64);
    REQUIRE(out.width() == 64);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.pixels()[i] == doctest::Approx(ref.pixels()[i]).epsilon(1e-12));
  }
  SUBCASE("seeded draws are deterministic and sized") {
    std::mt19937_64 r1(4), r2(4);
    const auto a = augment_image(img, r1, 32, 0.4);
    const auto b = augment_image(img, r2, 32, 0.4);
    CHECK(a == b);
    CHECK(a.width() == 32);
    CHECK(a.height() == 32);
  }
  SUBCASE("parameter ranges") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      const auto p = draw_crop(rng, draw_rotation(rng));
      CHECK(p.angle_deg >= 0.0);
      CHECK(p.angle_deg < 360.0);
      CHECK(p.scale >= 0.9);
      CHECK(p.scale <= 1.1);
      CHECK(std::abs(p.shift_x) <= 4);
      CHECK(std::abs(p.shift_y) <= 4);
      CHECK(p.crop_x >= 0.0);
      CHECK(p.crop_x <= 1.0);
    }
  }
  SUBCASE("mirror flips the crop") {
    AugmentParams m;
    m.mirror = true;
    const auto sq = testing::random_image(40, 40, 6);
    const auto out = apply_augmentation(sq, m, 40, 0.0);
    CHECK(out == mirror_horizontal(sq));
  }
  SUBCASE("rotation corners take the fill value") {
    AugmentParams r;
    r.angle_deg = 45.0;
    const auto out = apply_augmentation(GrayImage(40, 40, 0.9), r, 40, 0.25);
    CHECK(out.at(0, 0) == 0.25);
    CHECK(out.at(20, 20) == doctest::Approx(0.9));
  }
  SUBCASE("augmented set is sixteen times larger") {
    std::vector<Sample> src{{img, 0}, {testing::random_image(70, 90, 8), 1}, {img, 1}};
    std::mt19937_64 r1(1), r2(2);
    const auto a = build_augmented_set(src, r1, 32);
    const auto b = build_augmented_set(src, r2, 32);
    CHECK(a.size() == 16 * src.size());
    CHECK(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].label == src[i / 16].label);
    CHECK_FALSE(a[0].image == b[0].image);
  }
  CHECK(mean_pixel(std::vector<Sample>{{GrayImage(2, 2, 0.2), 0}, {GrayImage(2, 2, 0.6), 1}}) ==
        doctest::Approx(0.4));
}

TEST_CASE("stratified split") {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 50; ++i) s.push_back({GrayImage(1, 1), i < 30 ? 0u : 1u});
  const auto sp = stratified_split(s, 0.2, 3);
  CHECK(sp.test.size() == 10);
  CHECK(sp.train.size() == 40);
  std::size_t test_pos = 0;
  for (auto i : sp.test) test_pos += s[i].label;
  CHECK(test_pos == 4);
  const auto again = stratified_split(s, 0.2, 3);
  CHECK(again.test == sp.test);
  CHECK(stratified_split(s, 0.0, 3).test.empty());
}

TEST_CASE("training") {
  TrainConfig defaults;
  CHECK(defaults.learning_rate == 0.001);
  CHECK(defaults.epochs == 20);
  CHECK(defaults.batch_size == 32);
  CHECK(defaults.momentum == 0.9);

  auto cfg = tiny_config();
  cfg.input_size = 16;
  const auto data = blob_samples(6, 16, 1);

  SUBCASE("single-class data is rejected") {
    std::vector<Sample> one{data[0], data[2]};
    CHECK_THROWS_AS(train(one, cfg, TrainConfig{}), ArgumentError);
  }
  SUBCASE("loss falls over the first epochs on separable data") {
    TrainConfig tc;
    tc.epochs = 3;
    tc.augmentation = false;
    tc.test_fraction = 0.0;
    tc.batch_size = 4;
    tc.learning_rate = 0.01;
    const auto r = train(data, cfg, tc);
    REQUIRE(r.history.size() == 3);
    CHECK(r.history[1].train_loss <= r.history[0].train_loss);
    CHECK(r.history[2].train_loss <= r.history[1].train_loss);
  }
  SUBCASE("fixed seed reproduces the checkpoint bit for bit") {
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    const auto a = train(data, cfg, tc);
    const auto b = train(data, cfg, tc);
    auto ma = a.model, mb = b.model;
    CHECK(save_checkpoint(ma) == save_checkpoint(mb));
    CHECK(a.split.test.size() == 2);
    REQUIRE(a.history.size() == 2);
    CHECK(a.history[0].test_accuracy.has_value());
    const auto j = nlohmann::json::parse(to_json_line(a.history[0]));
    CHECK(j["epoch"] == 1);
    CHECK(j.contains("train_loss"));
  }
}
