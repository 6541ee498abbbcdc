#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mammo/cnn/tensor.hpp"

namespace mammo::cnn {

enum class Mode { Train, Infer };

// Functional forms of every layer. Activations are NCHW; dense inputs are
// flattened to [N, features]. Backward functions return exact gradients of
// the forward map (its adjoint applied to grad_out).

/// Cross-correlation with zero padding. weights [Cout, Cin, k, k], bias [Cout].
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
              std::size_t padding);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, std::size_t stride, std::size_t padding,
                          const Tensor& grad_out);

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index of each output's winner
};

/// Max over window x window patches; first maximum in row-major order wins.
PoolResult maxpool2d(const Tensor& input, std::size_t window = 3, std::size_t stride = 2);
Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& grad_out);

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  explicit BatchNormParams(std::size_t channels = 0);
};

/// Values saved by a training-mode forward pass for the backward pass.
struct BatchNormCache {
  Tensor normalized;
  std::vector<double> inv_std;
};

/// Train mode uses batch statistics and updates the running estimates.
Tensor batchnorm2d(const Tensor& input, BatchNormParams& params, Mode mode, BatchNormCache* cache = nullptr);

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

BatchNormGrads batchnorm2d_backward(const BatchNormParams& params, const BatchNormCache& cache,
                                    const Tensor& grad_out);

/// y = x W^T + b with x [N, in], W [out, in], b [out].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

struct Prediction {
  std::vector<double> probabilities;
  std::size_t label = 0;
};

/// Max-subtracted softmax; label is the argmax (lowest index on ties).
Prediction softmax_predict(std::span<const double> logits);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad_logits;
};

/// -log p[label] with p clamped at 1e-12; gradient w.r.t. logits is p - onehot.
LossResult cross_entropy(std::span<const double> probabilities, std::size_t label);

}  // namespace mammo::cnn
