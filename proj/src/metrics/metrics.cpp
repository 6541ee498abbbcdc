#include "mammo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "mammo/errors.hpp"

namespace mammo::metrics {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const LabeledPrediction> predictions) {
  if (predictions.empty()) throw ArgumentError("confusion: no predictions");
  ConfusionCounts c;
  for (const auto& p : predictions) {
    if (p.truly_abnormal) {
      (p.predicted_abnormal ? c.tp : c.fn) += 1;
    } else {
      (p.predicted_abnormal ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

double f_measure(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double g_mean(double sensitivity, double specificity) { return std::sqrt(sensitivity * specificity); }

MetricReport compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ArgumentError("compute_metrics: all counts are zero");
  MetricReport r;
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.sensitivity = ratio(c.tp, c.tp + c.fn);
  r.recall = r.sensitivity;
  r.specificity = ratio(c.tn, c.tn + c.fp);
  r.precision = ratio(c.tp, c.tp + c.fp);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) r.f_measure = f_measure(*r.precision, *r.recall);
  if (r.sensitivity && r.specificity) r.g_mean = g_mean(*r.sensitivity, *r.specificity);
  return r;
}

std::vector<RocPoint> roc_curve(std::span<const ScoredPrediction> scores) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw ArgumentError("roc_curve: non-finite score");
    (s.truth ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw ArgumentError("roc_curve: need at least one positive and one negative");

  std::vector<ScoredPrediction> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<RocPoint> curve{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) (sorted[i].truth ? tp : fp) += 1;
    const RocPoint p{static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)};
    if (!(p == curve.back())) curve.push_back(p);
  }
  if (!(curve.back() == RocPoint{1.0, 1.0})) curve.push_back({1.0, 1.0});
  return curve;
}

double auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * 0.5 * (curve[i].tpr + curve[i - 1].tpr);
  }
  return area;
}

std::string to_json(const MetricReport& r, const ConfusionCounts& c) {
  auto val = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["accuracy"] = val(r.accuracy);
  j["sensitivity"] = val(r.sensitivity);
  j["specificity"] = val(r.specificity);
  j["precision"] = val(r.precision);
  j["recall"] = val(r.recall);
  j["f_measure"] = val(r.f_measure);
  j["g_mean"] = val(r.g_mean);
  j["auc"] = val(r.auc);
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["tn"] = c.tn;
  j["fn"] = c.fn;
  return j.dump();
}

std::string to_table(const MetricReport& r) {
  std::string out;
  auto row = [&](const char* name, const std::optional<double>& v) {
    char buf[64];
    if (v) std::snprintf(buf, sizeof buf, "%-12s %.4f\n", name, *v);
    else std::snprintf(buf, sizeof buf, "%-12s undefined\n", name);
    out += buf;
  };
  row("accuracy", r.accuracy);
  row("sensitivity", r.sensitivity);
  row("specificity", r.specificity);
  row("precision", r.precision);
  row("recall", r.recall);
  row("f-measure", r.f_measure);
  row("g-mean", r.g_mean);
  row("auc", r.auc);
  return out;
}

}  // namespace mammo::metrics
