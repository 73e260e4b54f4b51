#include "core/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/phantom.hpp"

namespace mbda {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::kValidationError, "train: learning_rate must be > 0");
  if (batch_size < 1) fail(ErrorCode::kValidationError, "train: batch_size must be >= 1");
  if (max_epochs < 0) fail(ErrorCode::kValidationError, "train: max_epochs must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    fail(ErrorCode::kValidationError, "train: invalid optimizer hyperparameters");
  }
}

double validation_error(const Network& net, std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& s : samples) {
    const bool malignant = predict_case(net, s.input) > 0.5;
    if (malignant != (s.label == Label::kMalignant)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

namespace {

void sort_by_id(std::vector<TrainingSample>& v) {
  std::stable_sort(v.begin(), v.end(), [](const TrainingSample& a, const TrainingSample& b) {
    return a.id < b.id;
  });
}

}  // namespace

Network train(std::vector<TrainingSample> training, std::vector<TrainingSample> validation,
              const ArchitectureConfig& arch, const TrainConfig& config,
              std::vector<EpochLog>* history) {
  config.validate();
  arch.validate();
  if (training.empty() || validation.empty()) {
    fail(ErrorCode::kInvalidArgument, "train: training and validation sets must be non-empty");
  }
  sort_by_id(training);
  sort_by_id(validation);

  std::vector<std::size_t> usable;
  bool has_benign = false, has_malignant = false;
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (training[i].input.channels != arch.input_channels) {
      fail(ErrorCode::kShapeMismatch, "train: sample channel count does not match architecture");
    }
    if (training[i].input.mask.empty()) continue;
    usable.push_back(i);
    (training[i].label == Label::kMalignant ? has_malignant : has_benign) = true;
  }
  if (!has_benign || !has_malignant) {
    fail(ErrorCode::kSingleClassTraining, "train: both classes must be present in training");
  }

  Network net = Network::initialize(arch, config.seed);
  Network best = net;
  best.info.selected_validation_error = validation_error(net, validation);
  if (history) history->clear();
  if (config.max_epochs == 0) return best;

  auto rng = make_rng(config.seed, 0x5EED);
  const std::size_t n_params = net.params.size();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad(n_params, 0.0);
  long step = 0;
  double best_error = 2.0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = training[order[k]];
        epoch_loss += loss_and_gradient(net, s.input, s.label, grad);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = grad[i] * scale;
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        net.params[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
      }
    }
    const double err = validation_error(net, validation);
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    if (history) history->push_back({epoch, mean_loss, err});
    logger().debug("epoch {} loss {:.6f} validation error {:.4f}", epoch, mean_loss, err);
    if (err < best_error) {
      best_error = err;
      best = net;
      best.info.selected_epoch = epoch;
      best.info.selected_validation_error = err;
    }
  }
  best.info.seed = config.seed;
  best.info.epochs_run = config.max_epochs;
  return best;
}

SplitPlan make_splits(std::span<const Label> labels, std::uint64_t seed, int folds) {
  if (folds < 3) fail(ErrorCode::kValidationError, "splits: need at least 3 folds");
  std::vector<std::size_t> benign, malignant;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::kMalignant ? malignant : benign).push_back(i);
  }
  if (labels.size() < static_cast<std::size_t>(2 * folds) || benign.empty() ||
      malignant.empty()) {
    fail(ErrorCode::kTooFewCases, "splits: need at least " + std::to_string(2 * folds) +
                                      " cases with both classes");
  }
  auto rng = make_rng(seed, 0x5B117);
  std::shuffle(benign.begin(), benign.end(), rng);
  std::shuffle(malignant.begin(), malignant.end(), rng);

  SplitPlan plan;
  plan.part_of.assign(labels.size(), 0);
  std::size_t counter = 0;
  for (const auto* group : {&benign, &malignant}) {
    for (std::size_t idx : *group) {
      plan.part_of[idx] = static_cast<int>(counter++ % static_cast<std::size_t>(folds));
    }
  }
  plan.folds.resize(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    auto& f = plan.folds[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int part = plan.part_of[i];
      if (part == k) {
        f.test.push_back(i);
      } else if (part == (k + 1) % folds) {
        f.validation.push_back(i);
      } else {
        f.train.push_back(i);
      }
    }
  }
  return plan;
}

}  // namespace mbda
