#include "mammo/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"

namespace mammo {

PreprocessResult preprocess(const GrayImage& image, const PipelineConfig& config) {
  PreprocessResult r;
  const std::size_t longest = std::max(image.width(), image.height());
  if (config.work_size > 0 && longest > config.work_size) {
    const double s = static_cast<double>(config.work_size) / static_cast<double>(longest);
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(image.width()) * s)));
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(image.height()) * s)));
    r.working = resize_bilinear(image, w, h);
  } else {
    r.working = image;
  }
  r.denoised = bm3d_denoise(r.working, config.noise_sigma, config.bm3d_profile());
  const GrayImage smoothed = median_filter(r.denoised, config.enhance.median_window);
  r.enhanced = remove_artifacts(normalize(smoothed, config.enhance.r1, config.enhance.r2));
  auto pect = remove_pectoral(r.enhanced, config.enhance);
  r.pectoral_removed = std::move(pect.image);
  r.pectoral_found = pect.removed.count() > 0;
  return r;
}

SegmentResult segment(const GrayImage& image, const PipelineConfig& config) {
  SegmentResult r;
  r.pre = preprocess(image, config);
  const GrayImage& input = r.pre.pectoral_removed;
  r.clusters = sfcm_run(input, config.sfcm);
  r.tumor_map = tumor_membership_map(r.clusters.memberships, r.clusters.centers, input.width(), input.height());
  r.contour = evolve(r.tumor_map, input, config.levelset);
  r.mask = extract_mask(r.contour.phi);
  return r;
}

BinaryMask resize_mask_nearest(const BinaryMask& mask, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ArgumentError("resize_mask_nearest: zero target size");
  BinaryMask out(width, height);
  for (std::size_t r = 0; r < height; ++r) {
    const auto sr = std::min(mask.height() - 1, (r * mask.height() + mask.height() / 2) / height);
    for (std::size_t c = 0; c < width; ++c) {
      const auto sc = std::min(mask.width() - 1, (c * mask.width() + mask.width() / 2) / width);
      out.set(r, c, mask.at(sr, sc));
    }
  }
  return out;
}

std::vector<cnn::Sample> to_samples(const std::vector<mias::LabeledImage>& items) {
  std::vector<cnn::Sample> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.image, item.label == mias::Label::Abnormal ? 1u : 0u});
  return out;
}

Evaluation evaluate(std::span<cnn::Network> models, std::span<const cnn::Sample> samples,
                    std::span<const std::size_t> indices) {
  if (models.empty()) throw ArgumentError("evaluate: no model");
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }
  std::vector<metrics::LabeledPrediction> labeled;
  std::vector<metrics::ScoredPrediction> scored;
  std::size_t positives = 0;
  for (const auto i : indices) {
    if (i >= samples.size()) throw ArgumentError("evaluate: index out of range");
    const auto pred = cnn::ensemble_predict(models, samples[i].image);
    const bool truth = samples[i].label == 1;
    positives += truth ? 1 : 0;
    labeled.push_back({pred.label == 1, truth});
    scored.push_back({pred.probabilities.at(1), truth});
  }
  Evaluation e;
  e.counts = metrics::confusion(labeled);
  e.report = metrics::compute_metrics(e.counts);
  e.majority_count = std::max(positives, indices.size() - positives);
  if (positives > 0 && positives < indices.size()) {
    e.roc = metrics::roc_curve(scored);
    e.report.auc = metrics::auc(e.roc);
  }
  return e;
}

}  // namespace mammo
