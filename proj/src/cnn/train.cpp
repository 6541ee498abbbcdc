#include "mammo/cnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "mammo/errors.hpp"

namespace mammo::cnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("TrainConfig: learning_rate must be positive");
  if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
  if (batch_size < 2) throw ArgumentError("TrainConfig: batch_size must be >= 2 (batchnorm)");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("TrainConfig: momentum must be in [0,1)");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ArgumentError("TrainConfig: test_fraction must be in [0,1)");
}

void SgdOptimizer::step(std::span<const ParamRef> params) {
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.value->size(), 0.0);
  }
  if (velocity_.size() != params.size()) throw ArgumentError("SgdOptimizer: parameter list changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value->values();
    const auto grad = params[i].grad->values();
    auto& v = velocity_[i];
    if (grad.size() != value.size() || v.size() != value.size()) {
      throw ArgumentError("SgdOptimizer: shape mismatch for " + params[i].name);
    }
    for (std::size_t j = 0; j < value.size(); ++j) {
      v[j] = momentum_ * v[j] + grad[j];
      value[j] -= lr_ * v[j];
    }
  }
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["test_accuracy"] = r.test_accuracy ? nlohmann::json(*r.test_accuracy) : nlohmann::json(nullptr);
  return j.dump();
}

Split stratified_split(std::span<const Sample> samples, double test_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Split split;
  std::size_t max_label = 0;
  for (const auto& s : samples) max_label = std::max(max_label, s.label);
  for (std::size_t label = 0; label <= max_label; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].label == label) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(idx.size())));
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double accuracy(Network& model, std::span<const Sample> samples) {
  if (samples.empty()) throw ArgumentError("accuracy: no samples");
  std::size_t correct = 0;
  for (const auto& s : samples) correct += predict(model, s.image).label == s.label;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train(std::span<const Sample> dataset, const NetworkConfig& network_config, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ArgumentError("train: empty dataset");
  bool has[2] = {false, false};
  for (const auto& s : dataset) {
    if (s.label > 1) throw ArgumentError("train: labels must be 0 (normal) or 1 (abnormal)");
    has[s.label] = true;
  }
  if (!has[0] || !has[1]) throw ArgumentError("train: dataset must contain both classes");

  TrainResult result{Network(network_config, config.seed), {}, stratified_split(dataset, config.test_fraction, config.seed)};
  const std::size_t input = network_config.input_size;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<Sample> base;
  for (auto i : result.split.train) base.push_back(dataset[i]);
  std::vector<Sample> train_set;
  if (config.augmentation) {
    train_set = build_augmented_set(base, rng, input);
  } else {
    for (auto& s : base) train_set.push_back({resize_center_crop(s.image, input), s.label});
  }
  std::vector<Sample> test_set;
  for (auto i : result.split.test) test_set.push_back({resize_center_crop(dataset[i].image, input), dataset[i].label});

  Network& model = result.model;
  SgdOptimizer optimizer(config.learning_rate, config.momentum);
  const auto params = model.trainable_parameters();
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    // Batches of batch_size; a trailing singleton joins the previous batch.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      batches.emplace_back(b, std::min(order.size(), b + config.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& [begin, end] : batches) {
      const std::size_t n = end - begin;
      if (n < 2) continue;
      std::vector<GrayImage> images;
      for (std::size_t k = begin; k < end; ++k) images.push_back(train_set[order[k]].image);
      const Tensor logits = model.forward(stack_inputs(images, input), Mode::Train);
      const std::size_t classes = logits.dim(1);
      Tensor grad(logits.shape());
      for (std::size_t k = 0; k < n; ++k) {
        const auto pred = softmax_predict(std::span<const double>(logits.data() + k * classes, classes));
        const auto loss = cross_entropy(pred.probabilities, train_set[order[begin + k]].label);
        loss_sum += loss.loss;
        for (std::size_t c = 0; c < classes; ++c) grad[k * classes + c] = loss.grad_logits[c] / static_cast<double>(n);
      }
      seen += n;
      model.zero_grad();
      model.backward(grad);
      optimizer.step(params);
    }
    EpochRecord rec{epoch, seen ? loss_sum / static_cast<double>(seen) : 0.0, std::nullopt};
    if (!std::isfinite(rec.train_loss)) throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    if (!test_set.empty()) rec.test_accuracy = accuracy(model, test_set);
    result.history.push_back(rec);
  }
  return result;
}

}  // namespace mammo::cnn
