#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mammo::metrics {

/// Tallies with "abnormal" as the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct LabeledPrediction {
  bool predicted_abnormal = false;
  bool truly_abnormal = false;
};

ConfusionCounts confusion(std::span<const LabeledPrediction> predictions);

/// Ratios whose denominator is zero are reported as nullopt ("undefined").
struct MetricReport {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_measure;
  std::optional<double> g_mean;
  std::optional<double> auc;
};

MetricReport compute_metrics(const ConfusionCounts& c);

/// Harmonic mean of precision and recall.
double f_measure(double precision, double recall);
double g_mean(double sensitivity, double specificity);

struct ScoredPrediction {
  double score = 0.0;  // probability of the abnormal class
  bool truth = false;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

/// Sweeps the distinct scores in descending order (positive if score >= t),
/// starting at (0,0) and ending at (1,1).
std::vector<RocPoint> roc_curve(std::span<const ScoredPrediction> scores);

/// Trapezoidal area under the curve.
double auc(std::span<const RocPoint> curve);

/// JSON object with every metric in fixed order; undefined values are null.
std::string to_json(const MetricReport& report, const ConfusionCounts& counts);
/// Fixed-order two-column text table.
std::string to_table(const MetricReport& report);

}  // namespace mammo::metrics
