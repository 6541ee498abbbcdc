#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mammo/cnn/layers.hpp"
#include "mammo/cnn/tensor.hpp"
#include "mammo/image.hpp"

namespace mammo::cnn {

enum class LayerKind : std::uint8_t { Conv = 1, BatchNorm = 2, Relu = 3, MaxPool = 4, Dense = 5 };

/// One entry of an architecture descriptor. Conv uses channels/kernel/stride/
/// padding; MaxPool uses kernel/stride; Dense uses channels as its width.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkConfig {
  std::size_t input_size = 256;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 2;
  std::size_t feature_dim = 300;

  /// Early AlexNet stack: three conv/BN/ReLU/pool blocks, dense(300), dense(2).
  static NetworkConfig full();
  /// Same stack with channel counts divided by 4 on 64x64 input.
  static NetworkConfig desk();

  /// Output shape for a batch of `batch` inputs; throws if any layer's
  /// spatial extent would drop below 1 or a pool window would not fit.
  Shape output_shape(std::size_t batch = 1) const;
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;  // null for non-trainable state (batchnorm running stats)
};

class Network {
 public:
  Network() = default;
  /// He-normal weights (std sqrt(2/fan_in)), zero biases.
  Network(NetworkConfig config, std::uint64_t seed);

  const NetworkConfig& config() const noexcept { return config_; }

  /// Logits [N, num_classes] for input [N, 1, S, S].
  Tensor forward(const Tensor& input, Mode mode);
  /// Back-propagates d(loss)/d(logits) from the last forward(Train) call,
  /// accumulating parameter gradients.
  void backward(const Tensor& grad_logits);
  void zero_grad();

  /// Activations of the penultimate dense layer (after its ReLU), shape [N, feature_dim].
  Tensor features(const Tensor& input);

  std::vector<ParamRef> parameters();
  std::vector<ParamRef> trainable_parameters();

 private:
  struct Layer {
    LayerSpec spec;
    Tensor weights, bias, grad_weights, grad_bias;
    BatchNormParams bn;
    // forward cache
    Tensor input;
    std::vector<std::size_t> argmax;
    BatchNormCache bn_cache;
  };

  Tensor run(const Tensor& input, Mode mode, std::size_t stop_after);

  NetworkConfig config_;
  std::vector<Layer> layers_;
  std::size_t feature_layer_ = 0;
};

/// Bilinear resize to input_size x input_size, packed as a [1,1,S,S] tensor.
Tensor image_to_input(const GrayImage& image, std::size_t input_size);
Tensor stack_inputs(std::span<const GrayImage> images, std::size_t input_size);

/// Probabilities and label for one image in inference mode.
Prediction predict(Network& model, const GrayImage& image);

/// Majority vote over models (lowest label on ties); probabilities averaged.
Prediction ensemble_predict(std::span<Network> models, const GrayImage& image);

Tensor extract_features(Network& model, const GrayImage& image);

}  // namespace mammo::cnn
