#include "mammo/cnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/simd.hpp"

namespace mammo::cnn {
namespace {

struct ConvGeometry {
  std::size_t n, cin, h, w, cout, k, stride, pad, oh, ow;

  std::size_t patch() const { return cin * k * k; }
  std::size_t positions() const { return oh * ow; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights, std::size_t stride, std::size_t padding) {
  if (input.rank() != 4 || weights.rank() != 4) throw ArgumentError("conv2d: expected rank-4 input and weights");
  if (weights.dim(1) != input.dim(1)) {
    throw ArgumentError("conv2d: input has " + std::to_string(input.dim(1)) + " channels, kernel expects " +
                        std::to_string(weights.dim(1)));
  }
  if (weights.dim(2) != weights.dim(3)) throw ArgumentError("conv2d: kernels must be square");
  if (stride == 0) throw ArgumentError("conv2d: stride must be >= 1");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), weights.dim(0), weights.dim(2), stride,
                 padding, 0, 0};
  if (g.h + 2 * padding < g.k || g.w + 2 * padding < g.k) throw ArgumentError("conv2d: kernel larger than input");
  g.oh = (g.h + 2 * padding - g.k) / stride + 1;
  g.ow = (g.w + 2 * padding - g.k) / stride + 1;
  return g;
}

// col[(ci*k + ky)*k + kx][oy*ow + ox] for one batch item.
void im2col(const ConvGeometry& g, const double* image, std::vector<double>& col) {
  col.assign(g.patch() * g.positions(), 0.0);
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* dst = col.data() + ((ci * g.k + ky) * g.k + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t x =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dst[oy * g.ow + ox] = image[(ci * g.h + static_cast<std::size_t>(y)) * g.w + static_cast<std::size_t>(x)];
          }
        }
      }
}

void col2im(const ConvGeometry& g, const std::vector<double>& col, double* image) {
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* src = col.data() + ((ci * g.k + ky) * g.k + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t x =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.w)) continue;
            image[(ci * g.h + static_cast<std::size_t>(y)) * g.w + static_cast<std::size_t>(x)] += src[oy * g.ow + ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  const auto g = conv_geometry(input, weights, stride, padding);
  if (bias.size() != g.cout) throw ArgumentError("conv2d: bias length must equal output channels");
  Tensor out({g.n, g.cout, g.oh, g.ow});
  std::vector<double> col;
  const std::size_t p = g.positions(), kk = g.patch();
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, input.data() + n * g.cin * g.h * g.w, col);
    for (std::size_t co = 0; co < g.cout; ++co) {
      std::span<double> dst(out.data() + (n * g.cout + co) * p, p);
      std::fill(dst.begin(), dst.end(), bias[co]);
      const double* wrow = weights.data() + co * kk;
      for (std::size_t j = 0; j < kk; ++j) {
        if (wrow[j] != 0.0) simd::axpy(wrow[j], std::span<const double>(col.data() + j * p, p), dst);
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, std::size_t stride, std::size_t padding,
                          const Tensor& grad_out) {
  const auto g = conv_geometry(input, weights, stride, padding);
  if (grad_out.shape() != Shape{g.n, g.cout, g.oh, g.ow}) throw ArgumentError("conv2d_backward: grad shape mismatch");
  ConvGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({g.cout})};
  std::vector<double> col, dcol;
  const std::size_t p = g.positions(), kk = g.patch();
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, input.data() + n * g.cin * g.h * g.w, col);
    dcol.assign(col.size(), 0.0);
    for (std::size_t co = 0; co < g.cout; ++co) {
      std::span<const double> dy(grad_out.data() + (n * g.cout + co) * p, p);
      double bsum = 0.0;
      for (double v : dy) bsum += v;
      grads.bias[co] += bsum;
      double* dw = grads.weights.data() + co * kk;
      const double* wrow = weights.data() + co * kk;
      for (std::size_t j = 0; j < kk; ++j) {
        std::span<const double> colj(col.data() + j * p, p);
        dw[j] += simd::dot(dy, colj);
        simd::axpy(wrow[j], dy, std::span<double>(dcol.data() + j * p, p));
      }
    }
    col2im(g, dcol, grads.input.data() + n * g.cin * g.h * g.w);
  }
  return grads;
}

PoolResult maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  if (input.rank() != 4) throw ArgumentError("maxpool2d: expected rank-4 input");
  if (window == 0 || stride == 0) throw ArgumentError("maxpool2d: window and stride must be >= 1");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (window > h || window > w) {
    throw ArgumentError("maxpool2d: window " + std::to_string(window) + " exceeds spatial extent " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  PoolResult out{Tensor({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = base + oy * stride * w + ox * stride;
        for (std::size_t ky = 0; ky < window; ++ky)
          for (std::size_t kx = 0; kx < window; ++kx) {
            const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
            if (input[idx] > input[best]) best = idx;
          }
        out.output[o] = input[best];
        out.argmax[o] = best;
      }
  }
  return out;
}

Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) throw ArgumentError("maxpool2d_backward: gradient size mismatch");
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_out[i];
  return dx;
}

BatchNormParams::BatchNormParams(std::size_t channels)
    : gamma({channels}, 1.0), beta({channels}, 0.0), running_mean({channels}, 0.0), running_var({channels}, 1.0) {}

Tensor batchnorm2d(const Tensor& input, BatchNormParams& params, Mode mode, BatchNormCache* cache) {
  if (input.rank() != 4) throw ArgumentError("batchnorm2d: expected rank-4 input");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (params.gamma.size() != c) throw ArgumentError("batchnorm2d: channel count mismatch");
  Tensor out(input.shape());
  if (mode == Mode::Infer) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double scale = params.gamma[ch] / std::sqrt(params.running_var[ch] + params.eps);
      const double m = params.running_mean[ch];
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) out[off + i] = scale * (input[off + i] - m) + params.beta[ch];
      }
    }
    return out;
  }
  if (n < 2) throw ArgumentError("batchnorm2d: training mode needs a batch of at least 2");
  BatchNormCache local;
  BatchNormCache& cc = cache ? *cache : local;
  cc.normalized = Tensor(input.shape());
  cc.inv_std.assign(c, 0.0);
  const double count = static_cast<double>(n * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) mean += input[off + i];
    }
    mean /= count;
    double var = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double d = input[off + i] - mean;
        var += d * d;
      }
    }
    var /= count;
    const double inv = 1.0 / std::sqrt(var + params.eps);
    cc.inv_std[ch] = inv;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double xhat = (input[off + i] - mean) * inv;
        cc.normalized[off + i] = xhat;
        out[off + i] = params.gamma[ch] * xhat + params.beta[ch];
      }
    }
    const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
    params.running_mean[ch] = params.momentum * params.running_mean[ch] + (1.0 - params.momentum) * mean;
    params.running_var[ch] = params.momentum * params.running_var[ch] + (1.0 - params.momentum) * unbiased;
  }
  return out;
}

BatchNormGrads batchnorm2d_backward(const BatchNormParams& params, const BatchNormCache& cache,
                                    const Tensor& grad_out) {
  const Tensor& xhat = cache.normalized;
  if (grad_out.shape() != xhat.shape()) throw ArgumentError("batchnorm2d_backward: gradient shape mismatch");
  const std::size_t n = xhat.dim(0), c = xhat.dim(1), hw = xhat.dim(2) * xhat.dim(3);
  BatchNormGrads g{Tensor(xhat.shape()), Tensor({c}), Tensor({c})};
  const double count = static_cast<double>(n * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += grad_out[off + i];
        sum_dy_xhat += grad_out[off + i] * xhat[off + i];
      }
    }
    g.beta[ch] = sum_dy;
    g.gamma[ch] = sum_dy_xhat;
    const double k = params.gamma[ch] * cache.inv_std[ch] / count;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        g.input[off + i] = k * (count * grad_out[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
      }
    }
  }
  return g;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() < 1 || weights.rank() != 2) throw ArgumentError("dense: bad ranks");
  const std::size_t n = input.dim(0), in = weights.dim(1), out_dim = weights.dim(0);
  if (input.size() != n * in) {
    throw ArgumentError("dense: input features " + std::to_string(n ? input.size() / n : 0) +
                        " do not match weight columns " + std::to_string(in));
  }
  if (bias.size() != out_dim) throw ArgumentError("dense: bias length mismatch");
  Tensor out({n, out_dim});
  for (std::size_t b = 0; b < n; ++b) {
    std::span<const double> x(input.data() + b * in, in);
    for (std::size_t o = 0; o < out_dim; ++o) {
      out[b * out_dim + o] = bias[o] + simd::dot(std::span<const double>(weights.data() + o * in, in), x);
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  const std::size_t n = input.dim(0), in = weights.dim(1), out_dim = weights.dim(0);
  if (input.size() != n * in || grad_out.size() != n * out_dim) throw ArgumentError("dense_backward: shape mismatch");
  DenseGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({out_dim})};
  for (std::size_t b = 0; b < n; ++b) {
    std::span<const double> x(input.data() + b * in, in);
    std::span<double> dx(g.input.data() + b * in, in);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double dy = grad_out[b * out_dim + o];
      g.bias[o] += dy;
      if (dy == 0.0) continue;
      simd::axpy(dy, x, std::span<double>(g.weights.data() + o * in, in));
      simd::axpy(dy, std::span<const double>(weights.data() + o * in, in), dx);
    }
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  return out;
}

Prediction softmax_predict(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax_predict: empty logits");
  Prediction p;
  const double top = *std::max_element(logits.begin(), logits.end());
  p.probabilities.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += (p.probabilities[i] = std::exp(logits[i] - top));
  for (double& v : p.probabilities) v /= total;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[p.label]) p.label = i;
  return p;
}

LossResult cross_entropy(std::span<const double> probabilities, std::size_t label) {
  if (label >= probabilities.size()) throw ArgumentError("cross_entropy: label out of range");
  LossResult r;
  r.loss = -std::log(std::max(probabilities[label], 1e-12));
  r.grad_logits.assign(probabilities.begin(), probabilities.end());
  r.grad_logits[label] -= 1.0;
  return r;
}

}  // namespace mammo::cnn
