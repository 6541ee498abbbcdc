#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/bm3d.hpp"
#include "mammo/cnn/network.hpp"
#include "mammo/cnn/train.hpp"
#include "mammo/enhance.hpp"
#include "mammo/levelset.hpp"
#include "mammo/mias.hpp"
#include "mammo/metrics.hpp"
#include "mammo/sfcm.hpp"

namespace mammo {

struct PipelineConfig {
  double noise_sigma = 10.0;  // 8-bit scale
  /// When unset, thresholds follow Bm3dProfile::for_sigma(noise_sigma).
  std::optional<Bm3dProfile> bm3d;
  EnhanceConfig enhance;
  SfcmConfig sfcm;
  LevelSetConfig levelset;
  std::string network_profile = "desk";  // "desk" or "full"
  cnn::TrainConfig train;

  std::filesystem::path data_dir;
  std::filesystem::path info_path;
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  /// Segmentation runs on images resized so the longer side is at most this (0 keeps size).
  std::size_t work_size = 256;
  /// Longer-side cap applied while loading a dataset for training/evaluation.
  std::size_t load_max_side = 256;

  Bm3dProfile bm3d_profile() const;
  cnn::NetworkConfig network() const;
  /// Copies `seed` into the per-stage seeds and checks every section.
  void finalize();
};

/// Sets one `section.key` to `value`; unknown keys and malformed values throw ArgumentError.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
/// Applies `section.key = value` lines over `config`; '#' starts a comment.
void apply_config_text(PipelineConfig& config, std::string_view text);
PipelineConfig parse_config(std::string_view text);
/// Every key with its effective value, one `section.key = value` per line.
std::string config_to_text(const PipelineConfig& config);

struct PreprocessResult {
  GrayImage working;  // input after optional work-size resize
  GrayImage denoised;
  GrayImage enhanced;  // median + normalize + artifact removal
  GrayImage pectoral_removed;
  bool pectoral_found = false;
};

PreprocessResult preprocess(const GrayImage& image, const PipelineConfig& config);

struct SegmentResult {
  PreprocessResult pre;
  SfcmResult clusters;
  GrayImage tumor_map;
  EvolveResult contour;
  BinaryMask mask;
};

SegmentResult segment(const GrayImage& image, const PipelineConfig& config);

/// Nearest-neighbour resample of a mask.
BinaryMask resize_mask_nearest(const BinaryMask& mask, std::size_t width, std::size_t height);

/// Raw (non-enhanced) images paired with labels, as consumed by the classifier.
std::vector<cnn::Sample> to_samples(const std::vector<mias::LabeledImage>& items);

struct Evaluation {
  metrics::ConfusionCounts counts;
  metrics::MetricReport report;
  std::vector<metrics::RocPoint> roc;
  std::size_t majority_count = 0;  // size of the larger class in the evaluated set
};

/// Confusion, metrics and ROC over `indices` (all samples when empty).
Evaluation evaluate(std::span<cnn::Network> models, std::span<const cnn::Sample> samples,
                    std::span<const std::size_t> indices = {});

}  // namespace mammo
