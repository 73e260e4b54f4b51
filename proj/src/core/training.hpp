#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/network.hpp"

namespace mbda {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_epochs = 100;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainingSample {
  std::string id;
  NetInput input;
  Label label;
};

struct EpochLog {
  int epoch;
  double train_loss;
  double validation_error;
};

// Mini-batch Adam on the cross-entropy loss. Samples are put in canonical id
// order before the seeded per-epoch shuffle, so caller ordering is
// irrelevant. Returns the snapshot with the lowest validation
// misclassification rate (earliest epoch on ties). Empty-mask samples are
// skipped for gradient steps and scored 0.0 during validation.
Network train(std::vector<TrainingSample> training, std::vector<TrainingSample> validation,
              const ArchitectureConfig& arch, const TrainConfig& config,
              std::vector<EpochLog>* history = nullptr);

// Fraction of samples misclassified at the 0.5 threshold.
double validation_error(const Network& net, std::span<const TrainingSample> samples);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Stratified k-fold plan: fold k tests on part k, validates on part k+1 and
// trains on the rest (60/20/20 for five folds). Indices refer to the label
// sequence passed to make_splits.
struct SplitPlan {
  std::vector<int> part_of;  // per case
  std::vector<Fold> folds;
};

inline constexpr int kDefaultFolds = 5;

// Throws TooFewCases when fewer than 2 * folds cases or a single class.
SplitPlan make_splits(std::span<const Label> labels, std::uint64_t seed,
                      int folds = kDefaultFolds);

}  // namespace mbda
