#include "mammo/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mammo/errors.hpp"

namespace mammo {

namespace {

// Source coordinate of output index i for corner-aligned sampling.
double source_coord(std::size_t i, std::size_t in, std::size_t out) {
  if (out == 1) return 0.5 * static_cast<double>(in - 1);
  return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
}

}  // namespace

double sample_bilinear(const GrayImage& image, double x, double y, double fill) noexcept {
  const double wmax = static_cast<double>(image.width() - 1);
  const double hmax = static_cast<double>(image.height() - 1);
  if (!(x >= 0.0 && y >= 0.0 && x <= wmax && y <= hmax)) return fill;
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = image.at(y0, x0) + fx * (image.at(y0, x1) - image.at(y0, x0));
  const double bottom = image.at(y1, x0) + fx * (image.at(y1, x1) - image.at(y1, x0));
  return top + fy * (bottom - top);
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw ArgumentError("resize_bilinear: zero target dimension");
  if (image.empty()) throw ArgumentError("resize_bilinear: empty source image");
  GrayImage out(out_w, out_h);
  for (std::size_t r = 0; r < out_h; ++r) {
    const double y = source_coord(r, image.height(), out_h);
    for (std::size_t c = 0; c < out_w; ++c) {
      out.at(r, c) = sample_bilinear(image, source_coord(c, image.width(), out_w), y, 0.0);
    }
  }
  return out;
}

LabelMap connected_components(const BinaryMask& mask) {
  LabelMap out{mask.width(), mask.height(), std::vector<std::uint32_t>(mask.size(), 0), 0};
  const auto w = static_cast<std::ptrdiff_t>(mask.width());
  const auto h = static_cast<std::ptrdiff_t>(mask.height());
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start] != 0) continue;
    ++next;
    out.labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const auto r = static_cast<std::ptrdiff_t>(p) / w;
      const auto c = static_cast<std::ptrdiff_t>(p) % w;
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const auto rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          const auto q = static_cast<std::size_t>(rr * w + cc);
          if (mask[q] && out.labels[q] == 0) {
            out.labels[q] = next;
            stack.push_back(q);
          }
        }
      }
    }
  }
  out.component_count = next;
  return out;
}

BinaryMask largest_component(const LabelMap& labels) {
  BinaryMask out(labels.width, labels.height);
  if (labels.component_count == 0) return out;
  std::vector<std::size_t> sizes(labels.component_count + 1, 0);
  for (auto l : labels.labels) ++sizes[l];
  std::uint32_t best = 1;
  for (std::uint32_t l = 2; l <= labels.component_count; ++l) {
    if (sizes[l] > sizes[best]) best = l;
  }
  for (std::size_t i = 0; i < labels.labels.size(); ++i) out.set(i, labels.labels[i] == best);
  return out;
}

GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian_blur: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  GrayImage tmp(image.width(), image.height());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * image.clamped(r, c + k);
      }
      tmp.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  GrayImage out(image.width(), image.height());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.clamped(r + k, c);
      }
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  return out;
}

}  // namespace mammo
