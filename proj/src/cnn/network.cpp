#include "mammo/cnn/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"

namespace mammo::cnn {

namespace {

std::vector<LayerSpec> alexnet_stem(std::size_t divisor, std::size_t first_padding, std::size_t feature_dim,
                                    std::size_t classes) {
  const auto conv = [](std::size_t ch, std::size_t k, std::size_t s, std::size_t p) {
    return LayerSpec{LayerKind::Conv, ch, k, s, p};
  };
  const LayerSpec bn{LayerKind::BatchNorm};
  const LayerSpec act{LayerKind::Relu};
  const LayerSpec pool{LayerKind::MaxPool, 0, 3, 2, 0};
  return {conv(96 / divisor, 11, 4, first_padding), bn, act, pool,
          conv(256 / divisor, 5, 1, 2), bn, act, pool,
          conv(384 / divisor, 3, 1, 1), bn, act, pool,
          LayerSpec{LayerKind::Dense, feature_dim}, act,
          LayerSpec{LayerKind::Dense, classes}};
}

}  // namespace

NetworkConfig NetworkConfig::full() {
  NetworkConfig c;
  c.input_size = 256;
  c.layers = alexnet_stem(1, 0, c.feature_dim, c.num_classes);
  return c;
}

NetworkConfig NetworkConfig::desk() {
  NetworkConfig c;
  c.input_size = 64;
  // Padding 5 on the first conv keeps the third pool window inside the map.
  c.layers = alexnet_stem(4, 5, c.feature_dim, c.num_classes);
  return c;
}

Shape NetworkConfig::output_shape(std::size_t batch) const {
  Shape s{batch, 1, input_size, input_size};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.kernel == 0 || l.stride == 0 || l.channels == 0) throw ArgumentError(where + ": invalid conv spec");
        if (s.size() != 4 || s[2] + 2 * l.padding < l.kernel || s[3] + 2 * l.padding < l.kernel) {
          throw ArgumentError(where + ": conv kernel exceeds input " + shape_string(s));
        }
        s = {batch, l.channels, (s[2] + 2 * l.padding - l.kernel) / l.stride + 1,
             (s[3] + 2 * l.padding - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::MaxPool:
        if (s.size() != 4 || l.kernel > s[2] || l.kernel > s[3] || l.stride == 0) {
          throw ArgumentError(where + ": pool window exceeds input " + shape_string(s));
        }
        s = {batch, s[1], (s[2] - l.kernel) / l.stride + 1, (s[3] - l.kernel) / l.stride + 1};
        break;
      case LayerKind::Dense:
        if (l.channels == 0) throw ArgumentError(where + ": dense width must be >= 1");
        s = {batch, l.channels};
        break;
      case LayerKind::BatchNorm:
        if (s.size() != 4) throw ArgumentError(where + ": batchnorm needs a spatial input");
        break;
      case LayerKind::Relu:
        break;
    }
  }
  return s;
}

void NetworkConfig::validate() const {
  if (input_size == 0) throw ArgumentError("NetworkConfig: input_size must be >= 1");
  const Shape out = output_shape(1);
  if (out.size() != 2 || out[1] != num_classes) {
    throw ArgumentError("NetworkConfig: final layer must output " + std::to_string(num_classes) + " logits");
  }
  std::size_t dense_count = 0;
  for (const auto& l : layers) dense_count += l.kind == LayerKind::Dense;
  if (dense_count < 2) throw ArgumentError("NetworkConfig: need a feature dense layer before the classifier");
}

Network::Network(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  Shape s{1, 1, config_.input_size, config_.input_size};
  std::size_t last_dense = 0, prev_dense = 0;
  for (const auto& spec : config_.layers) {
    Layer layer;
    layer.spec = spec;
    if (spec.kind == LayerKind::Conv) {
      const std::size_t fan_in = s[1] * spec.kernel * spec.kernel;
      layer.weights = Tensor({spec.channels, s[1], spec.kernel, spec.kernel});
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (auto& v : layer.weights.values()) v = dist(rng);
      layer.bias = Tensor({spec.channels});
      s = {1, spec.channels, (s[2] + 2 * spec.padding - spec.kernel) / spec.stride + 1,
           (s[3] + 2 * spec.padding - spec.kernel) / spec.stride + 1};
    } else if (spec.kind == LayerKind::Dense) {
      const std::size_t fan_in = element_count(s);
      layer.weights = Tensor({spec.channels, fan_in});
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (auto& v : layer.weights.values()) v = dist(rng);
      layer.bias = Tensor({spec.channels});
      s = {1, spec.channels};
      prev_dense = last_dense;
      last_dense = layers_.size();
    } else if (spec.kind == LayerKind::BatchNorm) {
      layer.bn = BatchNormParams(s[1]);
    } else if (spec.kind == LayerKind::MaxPool) {
      s = {1, s[1], (s[2] - spec.kernel) / spec.stride + 1, (s[3] - spec.kernel) / spec.stride + 1};
    }
    if (spec.kind == LayerKind::BatchNorm) {
      layer.grad_weights = Tensor(layer.bn.gamma.shape());
      layer.grad_bias = Tensor(layer.bn.beta.shape());
    } else {
      layer.grad_weights = Tensor(layer.weights.shape());
      layer.grad_bias = Tensor(layer.bias.shape());
    }
    layers_.push_back(std::move(layer));
  }
  // Features are read after the penultimate dense layer and its activation.
  feature_layer_ = prev_dense;
  if (feature_layer_ + 1 < layers_.size() && layers_[feature_layer_ + 1].spec.kind == LayerKind::Relu) {
    ++feature_layer_;
  }
}

Tensor Network::run(const Tensor& input, Mode mode, std::size_t stop_after) {
  if (input.rank() != 4 || input.dim(1) != 1 || input.dim(2) != config_.input_size ||
      input.dim(3) != config_.input_size) {
    throw ArgumentError("Network: expected input [N,1," + std::to_string(config_.input_size) + "," +
                        std::to_string(config_.input_size) + "], got " + shape_string(input.shape()));
  }
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size() && i <= stop_after; ++i) {
    Layer& l = layers_[i];
    if (mode == Mode::Train) l.input = x;
    switch (l.spec.kind) {
      case LayerKind::Conv:
        x = conv2d(x, l.weights, l.bias, l.spec.stride, l.spec.padding);
        break;
      case LayerKind::BatchNorm:
        x = batchnorm2d(x, l.bn, mode, mode == Mode::Train ? &l.bn_cache : nullptr);
        break;
      case LayerKind::Relu:
        x = relu(x);
        break;
      case LayerKind::MaxPool: {
        auto pooled = maxpool2d(x, l.spec.kernel, l.spec.stride);
        if (mode == Mode::Train) l.argmax = std::move(pooled.argmax);
        x = std::move(pooled.output);
        break;
      }
      case LayerKind::Dense:
        x = dense(x.reshaped({x.dim(0), x.size() / x.dim(0)}), l.weights, l.bias);
        break;
    }
  }
  return x;
}

Tensor Network::forward(const Tensor& input, Mode mode) { return run(input, mode, layers_.size()); }

Tensor Network::features(const Tensor& input) { return run(input, Mode::Infer, feature_layer_); }

void Network::backward(const Tensor& grad_logits) {
  Tensor g = grad_logits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Layer& l = layers_[i];
    switch (l.spec.kind) {
      case LayerKind::Conv: {
        auto grads = conv2d_backward(l.input, l.weights, l.spec.stride, l.spec.padding, g);
        for (std::size_t j = 0; j < l.grad_weights.size(); ++j) l.grad_weights[j] += grads.weights[j];
        for (std::size_t j = 0; j < l.grad_bias.size(); ++j) l.grad_bias[j] += grads.bias[j];
        g = std::move(grads.input);
        break;
      }
      case LayerKind::BatchNorm: {
        auto grads = batchnorm2d_backward(l.bn, l.bn_cache, g);
        for (std::size_t j = 0; j < l.grad_weights.size(); ++j) l.grad_weights[j] += grads.gamma[j];
        for (std::size_t j = 0; j < l.grad_bias.size(); ++j) l.grad_bias[j] += grads.beta[j];
        g = std::move(grads.input);
        break;
      }
      case LayerKind::Relu:
        g = relu_backward(l.input, g);
        break;
      case LayerKind::MaxPool:
        g = maxpool2d_backward(l.input.shape(), l.argmax, g);
        break;
      case LayerKind::Dense: {
        const Tensor flat = l.input.reshaped({l.input.dim(0), l.input.size() / l.input.dim(0)});
        auto grads = dense_backward(flat, l.weights, g);
        for (std::size_t j = 0; j < l.grad_weights.size(); ++j) l.grad_weights[j] += grads.weights[j];
        for (std::size_t j = 0; j < l.grad_bias.size(); ++j) l.grad_bias[j] += grads.bias[j];
        g = grads.input.reshaped(l.input.shape());
        break;
      }
    }
  }
}

void Network::zero_grad() {
  for (auto& l : layers_) {
    l.grad_weights.fill(0.0);
    l.grad_bias.fill(0.0);
  }
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& l = layers_[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    if (l.spec.kind == LayerKind::Conv || l.spec.kind == LayerKind::Dense) {
      out.push_back({p + "weight", &l.weights, &l.grad_weights});
      out.push_back({p + "bias", &l.bias, &l.grad_bias});
    } else if (l.spec.kind == LayerKind::BatchNorm) {
      out.push_back({p + "gamma", &l.bn.gamma, &l.grad_weights});
      out.push_back({p + "beta", &l.bn.beta, &l.grad_bias});
      out.push_back({p + "running_mean", &l.bn.running_mean, nullptr});
      out.push_back({p + "running_var", &l.bn.running_var, nullptr});
    }
  }
  return out;
}

std::vector<ParamRef> Network::trainable_parameters() {
  auto all = parameters();
  std::erase_if(all, [](const ParamRef& p) { return p.grad == nullptr; });
  return all;
}

Tensor image_to_input(const GrayImage& image, std::size_t input_size) {
  const GrayImage sized = (image.width() == input_size && image.height() == input_size)
                              ? image
                              : resize_bilinear(image, input_size, input_size);
  const auto px = sized.pixels();
  return Tensor({1, 1, input_size, input_size}, std::vector<double>(px.begin(), px.end()));
}

Tensor stack_inputs(std::span<const GrayImage> images, std::size_t input_size) {
  const std::size_t plane = input_size * input_size;
  Tensor out({images.size(), 1, input_size, input_size});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor one = image_to_input(images[i], input_size);
    std::copy(one.values().begin(), one.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(i * plane));
  }
  return out;
}

Prediction predict(Network& model, const GrayImage& image) {
  const Tensor logits = model.forward(image_to_input(image, model.config().input_size), Mode::Infer);
  return softmax_predict(logits.values());
}

Prediction ensemble_predict(std::span<Network> models, const GrayImage& image) {
  if (models.empty()) throw ArgumentError("ensemble_predict: no models");
  Prediction out;
  std::vector<std::size_t> votes;
  for (auto& m : models) {
    const auto p = predict(m, image);
    if (out.probabilities.empty()) out.probabilities.assign(p.probabilities.size(), 0.0);
    if (votes.empty()) votes.assign(p.probabilities.size(), 0);
    for (std::size_t i = 0; i < p.probabilities.size(); ++i) out.probabilities[i] += p.probabilities[i];
    ++votes[p.label];
  }
  for (double& v : out.probabilities) v /= static_cast<double>(models.size());
  for (std::size_t i = 1; i < votes.size(); ++i)
    if (votes[i] > votes[out.label]) out.label = i;
  return out;
}

Tensor extract_features(Network& model, const GrayImage& image) {
  const Tensor f = model.features(image_to_input(image, model.config().input_size));
  return f.reshaped({f.size()});
}

}  // namespace mammo::cnn
