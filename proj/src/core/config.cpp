#include "core/config.hpp"

#include <set>
#include <string>

#include "core/error.hpp"

namespace mbda {

namespace {

// Reads known keys out of a JSON object and rejects the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::kValidationError, name_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kValidationError, name_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        fail(ErrorCode::kValidationError, name_ + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

nlohmann::json to_json(const ClassDistribution& d) {
  return {{"adc_mean", d.adc_mean}, {"adc_sd", d.adc_sd}, {"akc_mean", d.akc_mean},
          {"akc_sd", d.akc_sd},     {"s0_mean", d.s0_mean}, {"s0_sd", d.s0_sd}};
}

void merge(ClassDistribution& d, const nlohmann::json& j, const std::string& name) {
  Section s(j, name);
  s.read("adc_mean", d.adc_mean);
  s.read("adc_sd", d.adc_sd);
  s.read("akc_mean", d.akc_mean);
  s.read("akc_sd", d.akc_sd);
  s.read("s0_mean", d.s0_mean);
  s.read("s0_sd", d.s0_sd);
  s.finish();
}

}  // namespace

nlohmann::json to_json(const FitConfig& c) {
  return {{"adc_min", c.adc_min},
          {"adc_max", c.adc_max},
          {"akc_max", c.akc_max},
          {"s0_max_factor", c.s0_max_factor},
          {"max_iterations", c.max_iterations},
          {"cost_tolerance", c.cost_tolerance},
          {"param_tolerance", c.param_tolerance},
          {"constrain_akc_zero", c.constrain_akc_zero},
          {"damping_init", c.damping_init}};
}

void merge(FitConfig& c, const nlohmann::json& j) {
  Section s(j, "fit");
  s.read("adc_min", c.adc_min);
  s.read("adc_max", c.adc_max);
  s.read("akc_max", c.akc_max);
  s.read("s0_max_factor", c.s0_max_factor);
  s.read("max_iterations", c.max_iterations);
  s.read("cost_tolerance", c.cost_tolerance);
  s.read("param_tolerance", c.param_tolerance);
  s.read("constrain_akc_zero", c.constrain_akc_zero);
  s.read("damping_init", c.damping_init);
  s.finish();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},       {"seed", c.seed},
          {"beta1", c.beta1},                 {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

void merge(TrainConfig& c, const nlohmann::json& j) {
  Section s(j, "train");
  s.read("learning_rate", c.learning_rate);
  s.read("batch_size", c.batch_size);
  s.read("max_epochs", c.max_epochs);
  s.read("seed", c.seed);
  s.read("beta1", c.beta1);
  s.read("beta2", c.beta2);
  s.read("epsilon", c.epsilon);
  s.finish();
}

nlohmann::json to_json(const PhantomConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"lesion_center_min_x", c.lesion_center_min_x},
          {"lesion_center_max_x", c.lesion_center_max_x},
          {"lesion_center_min_y", c.lesion_center_min_y},
          {"lesion_center_max_y", c.lesion_center_max_y},
          {"lesion_axis_min", c.lesion_axis_min},
          {"lesion_axis_max", c.lesion_axis_max},
          {"fat_x0", c.fat_x0},
          {"fat_x1", c.fat_x1},
          {"fat_y0", c.fat_y0},
          {"fat_y1", c.fat_y1},
          {"fat_level_mean", c.fat_level_mean},
          {"fat_level_sd", c.fat_level_sd},
          {"parenchyma",
           {{"s0", c.parenchyma.s0}, {"adc", c.parenchyma.adc}, {"akc", c.parenchyma.akc}}},
          {"protocol", c.protocol},
          {"noise_sigma", c.noise_sigma},
          {"empty_lesion_fraction", c.empty_lesion_fraction},
          {"benign", to_json(c.benign)},
          {"malignant", to_json(c.malignant)},
          {"seed", c.seed}};
}

void merge(PhantomConfig& c, const nlohmann::json& j) {
  Section s(j, "phantom");
  s.read("width", c.width);
  s.read("height", c.height);
  s.read("lesion_center_min_x", c.lesion_center_min_x);
  s.read("lesion_center_max_x", c.lesion_center_max_x);
  s.read("lesion_center_min_y", c.lesion_center_min_y);
  s.read("lesion_center_max_y", c.lesion_center_max_y);
  s.read("lesion_axis_min", c.lesion_axis_min);
  s.read("lesion_axis_max", c.lesion_axis_max);
  s.read("fat_x0", c.fat_x0);
  s.read("fat_x1", c.fat_x1);
  s.read("fat_y0", c.fat_y0);
  s.read("fat_y1", c.fat_y1);
  s.read("fat_level_mean", c.fat_level_mean);
  s.read("fat_level_sd", c.fat_level_sd);
  if (const auto* p = s.child("parenchyma")) {
    Section ps(*p, "phantom.parenchyma");
    ps.read("s0", c.parenchyma.s0);
    ps.read("adc", c.parenchyma.adc);
    ps.read("akc", c.parenchyma.akc);
    ps.finish();
  }
  s.read("protocol", c.protocol);
  s.read("noise_sigma", c.noise_sigma);
  s.read("empty_lesion_fraction", c.empty_lesion_fraction);
  if (const auto* b = s.child("benign")) merge(c.benign, *b, "phantom.benign");
  if (const auto* m = s.child("malignant")) merge(c.malignant, *m, "phantom.malignant");
  s.read("seed", c.seed);
  s.finish();
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json modes = nlohmann::json::array();
  for (Mode m : c.modes) modes.push_back(mode_name(m));
  return {{"modes", modes},
          {"missing_fill", c.missing_fill == MissingFill::kZero ? "zero" : "nearest"},
          {"f2e_constrained_training", c.f2e_constrained_training},
          {"split_seed", c.split_seed},
          {"folds", c.folds},
          {"e2e_architecture", to_json(c.e2e_arch)},
          {"f2e_architecture", to_json(c.f2e_arch)}};
}

void merge(ScenarioConfig& c, const nlohmann::json& j) {
  Section s(j, "scenario");
  if (const auto* m = s.child("modes")) {
    if (!m->is_array()) fail(ErrorCode::kValidationError, "scenario.modes: expected an array");
    c.modes.clear();
    for (const auto& name : *m) c.modes.push_back(parse_mode(name.get<std::string>()));
  }
  std::string fill = c.missing_fill == MissingFill::kZero ? "zero" : "nearest";
  s.read("missing_fill", fill);
  if (fill == "zero") {
    c.missing_fill = MissingFill::kZero;
  } else if (fill == "nearest") {
    c.missing_fill = MissingFill::kNearest;
  } else {
    fail(ErrorCode::kValidationError, "scenario.missing_fill: expected 'nearest' or 'zero'");
  }
  s.read("f2e_constrained_training", c.f2e_constrained_training);
  s.read("split_seed", c.split_seed);
  s.read("folds", c.folds);
  if (const auto* a = s.child("e2e_architecture")) c.e2e_arch = architecture_from_json(*a);
  if (const auto* a = s.child("f2e_architecture")) c.f2e_arch = architecture_from_json(*a);
  s.finish();
}

nlohmann::json to_json(const RunConfig& c) {
  auto phantom = to_json(c.phantom);
  phantom["n_benign"] = c.n_benign;
  phantom["n_malignant"] = c.n_malignant;
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"fit", to_json(c.fit)},
          {"phantom", phantom},
          {"train", to_json(c.train)},
          {"scenario", to_json(c.scenario)},
          {"eval", {{"alpha", c.alpha}}}};
}

void merge(RunConfig& c, const nlohmann::json& j) {
  Section s(j, "config");
  if (j.contains("seed")) {
    s.read("seed", c.seed);
    c.phantom.seed = c.seed;
    c.train.seed = c.seed;
    c.scenario.split_seed = c.seed;
  } else {
    s.read("seed", c.seed);
  }
  s.read("threads", c.threads);
  if (const auto* f = s.child("fit")) merge(c.fit, *f);
  if (const auto* p = s.child("phantom")) {
    nlohmann::json rest = *p;
    if (rest.contains("n_benign")) {
      c.n_benign = rest["n_benign"].get<std::size_t>();
      rest.erase("n_benign");
    }
    if (rest.contains("n_malignant")) {
      c.n_malignant = rest["n_malignant"].get<std::size_t>();
      rest.erase("n_malignant");
    }
    merge(c.phantom, rest);
  }
  if (const auto* t = s.child("train")) merge(c.train, *t);
  if (const auto* sc = s.child("scenario")) merge(c.scenario, *sc);
  if (const auto* e = s.child("eval")) {
    Section es(*e, "eval");
    es.read("alpha", c.alpha);
    es.finish();
  }
  c.scenario.alpha = c.alpha;
  c.scenario.threads = c.threads;
  s.finish();
}

void RunConfig::validate() const {
  if (threads < 1) fail(ErrorCode::kValidationError, "config: threads must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::kValidationError, "eval.alpha must be in (0,1)");
  fit.validate();
  phantom.validate();
  train.validate();
  scenario.validate();
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  merge(c, j);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  return run_config_from_json(read_json_file(file));
}

}  // namespace mbda
