#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mammo/cnn/augment.hpp"
#include "mammo/cnn/network.hpp"

namespace mammo::cnn {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  bool augmentation = true;
  double test_fraction = 0.2;

  void validate() const;
};

/// Momentum SGD: v <- m v + grad; param <- param - lr v.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {}
  void step(std::span<const ParamRef> params);

 private:
  double lr_, momentum_;
  std::vector<std::vector<double>> velocity_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> test_accuracy;
};

std::string to_json_line(const EpochRecord& r);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split; round(test_fraction * class_count) of each class
/// goes to the test side.
Split stratified_split(std::span<const Sample> samples, double test_fraction, std::uint64_t seed);

struct TrainResult {
  Network model;
  std::vector<EpochRecord> history;
  Split split;
};

TrainResult train(std::span<const Sample> dataset, const NetworkConfig& network_config, const TrainConfig& config);

/// Fraction of samples whose predicted label matches.
double accuracy(Network& model, std::span<const Sample> samples);

}  // namespace mammo::cnn
