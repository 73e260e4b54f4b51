#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "core/dki.hpp"
#include "core/phantom.hpp"
#include "core/scenario.hpp"
#include "core/training.hpp"

namespace mbda {

// Merged run configuration. JSON layout:
//   {"seed": 1, "threads": 1, "fit": {...}, "phantom": {...},
//    "train": {...}, "scenario": {...}, "eval": {"alpha": 0.05}}
// Missing keys keep their defaults; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  FitConfig fit;
  PhantomConfig phantom;
  std::size_t n_benign = 100;
  std::size_t n_malignant = 121;
  TrainConfig train;
  ScenarioConfig scenario;
  double alpha = 0.05;

  // Validates every section. Throws ValidationError.
  void validate() const;
};

nlohmann::json to_json(const FitConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const PhantomConfig& c);
nlohmann::json to_json(const ScenarioConfig& c);
nlohmann::json to_json(const RunConfig& c);

// Overlays `j` onto the defaults held in `c`.
void merge(FitConfig& c, const nlohmann::json& j);
void merge(TrainConfig& c, const nlohmann::json& j);
void merge(PhantomConfig& c, const nlohmann::json& j);
void merge(ScenarioConfig& c, const nlohmann::json& j);
void merge(RunConfig& c, const nlohmann::json& j);

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file);

}  // namespace mbda
