#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/dki.hpp"
#include "core/dwi.hpp"
#include "core/network.hpp"
#include "core/stats.hpp"
#include "core/training.hpp"

namespace mbda {

// kMatched (inference == training) is not part of the enumerated matrix; it
// exists to check that adaptation is the identity on matched protocols.
enum class ScenarioKind { kShifted, kMissing, kMatched };

enum class Mode { kMatched, kAlteredE2E, kAlteredF2E, kMbda, kF2EMatched };

const char* kind_name(ScenarioKind kind) noexcept;
ScenarioKind parse_kind(const std::string& name);
// Report column names: e2e_matched, e2e_altered, f2e_altered, mbda, f2e_matched.
const char* mode_name(Mode mode) noexcept;
Mode parse_mode(const std::string& name);
const std::vector<Mode>& all_modes();

struct ScenarioSpec {
  std::vector<double> training;
  std::vector<double> inference;
  ScenarioKind kind = ScenarioKind::kMissing;

  // Throws ValidationError when the sets do not describe `kind`.
  void validate() const;
  // b-values present at training time but not at inference.
  std::vector<double> derived() const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// All alterations of one training subset: missing drops one non-zero b-value,
// shifted swaps one non-zero training b-value for one outside the subset.
// Removed b-values are visited in descending order, replacements ascending.
std::vector<ScenarioSpec> scenarios_for_training(const Protocol& full,
                                                 const std::vector<double>& training,
                                                 ScenarioKind kind);

// Missing: training subsets of size n and n-1 containing b0; shifted: sizes
// n-1 and n-2. For {0,100,750,1500} this is 9 missing and 12 shifted rows.
std::vector<ScenarioSpec> enumerate_scenarios(const Protocol& full, ScenarioKind kind);

enum class MissingFill { kNearest, kZero };

struct ScenarioConfig {
  std::vector<Mode> modes = all_modes();
  MissingFill missing_fill = MissingFill::kNearest;
  // Train F2E on AKC = 0 fits whenever the inference protocol forces the
  // constraint at test time (two b-values); two-b-value training subsets are
  // always constrained.
  bool f2e_constrained_training = true;
  std::uint64_t split_seed = 1;
  int folds = kDefaultFolds;
  double alpha = 0.05;
  int threads = 1;
  ArchitectureConfig e2e_arch = ArchitectureConfig::e2e(4);  // input_channels set per spec
  ArchitectureConfig f2e_arch = ArchitectureConfig::f2e();

  void validate() const;
};

struct ModeResult {
  Mode mode;
  std::vector<double> scores;  // dataset order
  double auc = 0.0;
  double delong_se = 0.0;
  std::vector<double> fold_aucs;
  double fold_sd = 0.0;
};

struct PairTest {
  Mode a;
  Mode b;
  DelongComparison comparison;
  bool significant = false;  // Holm-corrected
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<std::string> case_ids;
  std::vector<Label> labels;
  std::vector<ModeResult> modes;
  std::vector<PairTest> tests;

  const ModeResult* find(Mode mode) const;
};

// Trained networks shared between scenarios with the same training setup.
class NetworkCache {
 public:
  std::optional<Network> get(const std::string& key) const;
  void put(const std::string& key, const Network& net);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Network> nets_;
};

// Cases must be sorted by id (load_dataset order) and carry every b-value
// referenced by the spec.
ScenarioResult run_scenario(const ScenarioSpec& spec, const std::vector<LabeledCase>& dataset,
                            const SplitPlan& split, const FitConfig& fit,
                            const TrainConfig& train_config, const ScenarioConfig& config,
                            NetworkCache* cache = nullptr);

// Runs every spec and applies one Holm-Bonferroni correction across all
// pairwise tests of the matrix.
std::vector<ScenarioResult> run_scenarios(const std::vector<ScenarioSpec>& specs,
                                          const std::vector<LabeledCase>& dataset,
                                          const SplitPlan& split, const FitConfig& fit,
                                          const TrainConfig& train_config,
                                          const ScenarioConfig& config);

void apply_holm(std::vector<ScenarioResult>& results, double alpha);

// Channels fed to an E2E network trained on `training` when the case only
// provides `inference` b-values and no adaptation is done.
std::vector<ImagePlane> altered_channels(const DwiStack& inference_stack,
                                         const std::vector<double>& training,
                                         ScenarioKind kind, MissingFill fill);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioResult& result);
ScenarioResult result_from_json(const nlohmann::json& j);

// Table rows marks: training "x"; testing "x" measured, "o" derived.
std::vector<std::string> training_marks(const ScenarioSpec& spec, const Protocol& full);
std::vector<std::string> testing_marks(const ScenarioSpec& spec, const Protocol& full);

std::string report_csv(const std::vector<ScenarioResult>& results, const Protocol& full);
nlohmann::json report_json(const std::vector<ScenarioResult>& results, const Protocol& full);
// Mean AUC per mode, grouped by scenario kind.
nlohmann::json summary_json(const std::vector<ScenarioResult>& results);

// Writes report.csv, report.json, summary.json and results.json into dir.
void emit_report(const std::vector<ScenarioResult>& results, const Protocol& full,
                 const std::filesystem::path& dir);

}  // namespace mbda
