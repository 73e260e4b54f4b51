#include "core/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "core/adapt.hpp"
#include "core/error.hpp"
#include "core/log.hpp"
#include "core/parallel.hpp"
#include "core/phantom.hpp"

namespace mbda {

const char* kind_name(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::kShifted: return "shifted";
    case ScenarioKind::kMissing: return "missing";
    case ScenarioKind::kMatched: return "matched";
  }
  return "unknown";
}

ScenarioKind parse_kind(const std::string& name) {
  if (name == "shifted") return ScenarioKind::kShifted;
  if (name == "missing") return ScenarioKind::kMissing;
  if (name == "matched") return ScenarioKind::kMatched;
  fail(ErrorCode::kValidationError, "unknown scenario kind '" + name + "'");
}

const char* mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::kMatched: return "e2e_matched";
    case Mode::kAlteredE2E: return "e2e_altered";
    case Mode::kAlteredF2E: return "f2e_altered";
    case Mode::kMbda: return "mbda";
    case Mode::kF2EMatched: return "f2e_matched";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : all_modes()) {
    if (name == mode_name(m)) return m;
  }
  if (name == "matched") return Mode::kMatched;
  if (name == "altered_e2e") return Mode::kAlteredE2E;
  if (name == "altered_f2e") return Mode::kAlteredF2E;
  fail(ErrorCode::kValidationError, "unknown mode '" + name + "'");
}

const std::vector<Mode>& all_modes() {
  static const std::vector<Mode> modes{Mode::kMatched, Mode::kF2EMatched, Mode::kAlteredE2E,
                                       Mode::kAlteredF2E, Mode::kMbda};
  return modes;
}

namespace {

std::vector<double> set_difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << values[i];
  }
  return os.str();
}

}  // namespace

void ScenarioSpec::validate() const {
  Protocol::from_values(training);
  Protocol::from_values(inference);
  const auto only_train = set_difference(training, inference);
  const auto only_test = set_difference(inference, training);
  bool ok = false;
  switch (kind) {
    case ScenarioKind::kShifted:
      ok = only_train.size() == 1 && only_test.size() == 1;
      break;
    case ScenarioKind::kMissing:
      ok = only_train.size() == 1 && only_test.empty();
      break;
    case ScenarioKind::kMatched:
      ok = only_train.empty() && only_test.empty();
      break;
  }
  if (!ok) {
    fail(ErrorCode::kValidationError, std::string("scenario {") + join(training) + "} -> {" +
                                          join(inference) + "} is not a valid " +
                                          kind_name(kind) + " scenario");
  }
}

std::vector<double> ScenarioSpec::derived() const { return set_difference(training, inference); }

std::vector<ScenarioSpec> scenarios_for_training(const Protocol& full,
                                                 const std::vector<double>& training,
                                                 ScenarioKind kind) {
  const auto all = full.values();
  std::vector<ScenarioSpec> specs;
  std::vector<double> removable;
  for (double b : training) {
    if (b != 0.0) removable.push_back(b);
  }
  std::sort(removable.rbegin(), removable.rend());
  const auto outside = set_difference(all, training);
  for (double removed : removable) {
    std::vector<double> rest;
    for (double b : training) {
      if (b != removed) rest.push_back(b);
    }
    if (kind == ScenarioKind::kMissing) {
      if (rest.size() < 2) continue;
      specs.push_back(ScenarioSpec{training, rest, kind});
    } else if (kind == ScenarioKind::kShifted) {
      for (double added : outside) {
        auto inference = rest;
        inference.push_back(added);
        std::sort(inference.begin(), inference.end());
        specs.push_back(ScenarioSpec{training, inference, kind});
      }
    }
  }
  return specs;
}

namespace {

// Lexicographic k-combinations of the non-zero b-values, each prefixed with 0.
std::vector<std::vector<double>> training_subsets(const Protocol& full, std::size_t size) {
  std::vector<double> nonzero;
  for (double b : full.values()) {
    if (b != 0.0) nonzero.push_back(b);
  }
  std::vector<std::vector<double>> out;
  if (size < 2 || size - 1 > nonzero.size()) return out;
  const std::size_t k = size - 1;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    std::vector<double> subset{0.0};
    for (std::size_t i : idx) subset.push_back(nonzero[i]);
    out.push_back(subset);
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == nonzero.size() - k + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace

std::vector<ScenarioSpec> enumerate_scenarios(const Protocol& full, ScenarioKind kind) {
  std::vector<ScenarioSpec> specs;
  const std::size_t n = full.size();
  std::vector<std::size_t> sizes;
  if (kind == ScenarioKind::kMissing) {
    sizes = {n, n - 1};
  } else if (kind == ScenarioKind::kShifted) {
    sizes = {n - 1, n - 2};
  }
  for (std::size_t size : sizes) {
    for (const auto& training : training_subsets(full, size)) {
      auto rows = scenarios_for_training(full, training, kind);
      specs.insert(specs.end(), rows.begin(), rows.end());
    }
  }
  return specs;
}

void ScenarioConfig::validate() const {
  if (modes.empty()) fail(ErrorCode::kValidationError, "scenario: no modes selected");
  if (folds < 3) fail(ErrorCode::kValidationError, "scenario: need at least 3 folds");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::kValidationError, "scenario: alpha in (0,1)");
  e2e_arch.validate();
  f2e_arch.validate();
  if (e2e_arch.is_f2e()) fail(ErrorCode::kValidationError, "scenario: e2e_arch needs exploit layers");
  if (!f2e_arch.is_f2e()) fail(ErrorCode::kValidationError, "scenario: f2e_arch must not have exploit layers");
}

const ModeResult* ScenarioResult::find(Mode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

std::optional<Network> NetworkCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = nets_.find(key);
  if (it == nets_.end()) return std::nullopt;
  return it->second;
}

void NetworkCache::put(const std::string& key, const Network& net) {
  std::lock_guard<std::mutex> lock(mutex_);
  nets_.emplace(key, net);
}

std::size_t NetworkCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return nets_.size();
}

std::vector<ImagePlane> altered_channels(const DwiStack& inference_stack,
                                         const std::vector<double>& training,
                                         ScenarioKind kind, MissingFill fill) {
  const auto available = inference_stack.protocol().values();
  const auto extra = set_difference(available, training);
  std::vector<ImagePlane> planes;
  for (double b : training) {
    if (inference_stack.protocol().contains(BValue(b))) {
      planes.push_back(inference_stack.plane_at(BValue(b)));
    } else if (kind == ScenarioKind::kShifted && !extra.empty()) {
      planes.push_back(inference_stack.plane_at(BValue(extra.front())));
    } else if (fill == MissingFill::kZero) {
      planes.emplace_back(inference_stack.width(), inference_stack.height());
    } else {
      double best = available.front();
      for (double a : available) {
        if (std::abs(a - b) < std::abs(best - b)) best = a;
      }
      planes.push_back(inference_stack.plane_at(BValue(best)));
    }
  }
  return planes;
}

namespace {

bool has_mode(const ScenarioConfig& config, Mode mode) {
  return std::find(config.modes.begin(), config.modes.end(), mode) != config.modes.end();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_rng(seed, stream);
  return rng();
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string cache_key(const char* family, const ArchitectureConfig& arch,
                      const std::vector<double>& training, bool constrained, int fold,
                      const TrainConfig& tc, std::uint64_t split_seed) {
  std::ostringstream os;
  os << family << '|' << to_json(arch).dump() << '|' << join(training) << '|' << constrained
     << '|' << fold << '|' << tc.seed << '|' << tc.learning_rate << '|' << tc.batch_size << '|'
     << tc.max_epochs << '|' << split_seed;
  return os.str();
}

std::vector<TrainingSample> gather(const std::vector<std::size_t>& indices,
                                   const std::vector<LabeledCase>& dataset,
                                   const std::vector<NetInput>& inputs) {
  std::vector<TrainingSample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back({dataset[i].id, inputs[i], dataset[i].label});
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const std::vector<LabeledCase>& dataset,
                            const SplitPlan& split, const FitConfig& fit,
                            const TrainConfig& train_config, const ScenarioConfig& config,
                            NetworkCache* cache) {
  spec.validate();
  config.validate();
  fit.validate();
  train_config.validate();
  if (dataset.empty()) fail(ErrorCode::kTooFewCases, "scenario: empty dataset");
  if (split.part_of.size() != dataset.size()) {
    fail(ErrorCode::kValidationError, "scenario: split plan does not match the dataset");
  }
  for (std::size_t i = 1; i < dataset.size(); ++i) {
    if (!(dataset[i - 1].id < dataset[i].id)) {
      fail(ErrorCode::kValidationError, "scenario: dataset must be sorted by unique case id");
    }
  }

  const Protocol training = Protocol::from_values(spec.training);
  const Protocol inference = Protocol::from_values(spec.inference);
  const bool need_e2e = has_mode(config, Mode::kMatched) ||
                        has_mode(config, Mode::kAlteredE2E) || has_mode(config, Mode::kMbda);
  const bool need_f2e =
      has_mode(config, Mode::kF2EMatched) || has_mode(config, Mode::kAlteredF2E);

  const bool f2e_train_constrained =
      training.size() == 2 || (config.f2e_constrained_training && inference.size() == 2);
  FitConfig f2e_train_fit = fit;
  f2e_train_fit.constrain_akc_zero = fit.constrain_akc_zero || f2e_train_constrained;
  FitConfig f2e_test_fit = adaptation_fit_config(fit, inference.size());
  if (f2e_train_constrained) f2e_test_fit.constrain_akc_zero = true;

  const std::size_t n = dataset.size();
  std::vector<NetInput> matched_in(n), altered_in(n), mbda_in(n), f2e_train_in(n),
      f2e_test_in(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const auto& stack = dataset[i].stack;
    const DwiStack train_stack = subset_protocol(stack, training);
    const DwiStack test_stack = subset_protocol(stack, inference);
    if (need_e2e) {
      matched_in[i] = make_e2e_input(train_stack);
      if (has_mode(config, Mode::kAlteredE2E)) {
        const auto planes =
            altered_channels(test_stack, spec.training, spec.kind, config.missing_fill);
        altered_in[i] = make_e2e_input(planes, test_stack);
      }
      if (has_mode(config, Mode::kMbda)) {
        mbda_in[i] = make_e2e_input(adapt_stack(test_stack, training, fit).stack);
      }
    }
    if (need_f2e) {
      f2e_train_in[i] = make_f2e_input(fit_roi(train_stack, f2e_train_fit));
      if (has_mode(config, Mode::kAlteredF2E)) {
        f2e_test_in[i] = make_f2e_input(fit_roi(test_stack, f2e_test_fit));
      }
    }
  });

  ArchitectureConfig e2e_arch = config.e2e_arch;
  e2e_arch.input_channels = static_cast<int>(training.size());
  const auto& folds = split.folds;
  std::vector<std::vector<double>> scores(all_modes().size(), std::vector<double>(n, 0.0));
  auto slot = [](Mode m) { return static_cast<std::size_t>(m); };

  parallel_for(folds.size(), config.threads, [&](std::size_t k) {
    const auto& fold = folds[k];
    const int fold_id = static_cast<int>(k);
    auto obtain = [&](const char* family, const ArchitectureConfig& arch, bool constrained,
                      const std::vector<NetInput>& inputs, std::uint64_t stream) {
      const auto key = cache_key(family, arch, spec.training, constrained, fold_id,
                                 train_config, config.split_seed);
      if (cache) {
        if (auto hit = cache->get(key)) return *hit;
      }
      TrainConfig tc = train_config;
      tc.seed = derive_seed(train_config.seed, 2 * k + stream);
      Network net = train(gather(fold.train, dataset, inputs),
                          gather(fold.validation, dataset, inputs), arch, tc);
      if (cache) cache->put(key, net);
      return net;
    };
    if (need_e2e) {
      const Network net = obtain("e2e", e2e_arch, false, matched_in, 0);
      for (std::size_t i : fold.test) {
        if (has_mode(config, Mode::kMatched)) {
          scores[slot(Mode::kMatched)][i] = predict_case(net, matched_in[i]);
        }
        if (has_mode(config, Mode::kAlteredE2E)) {
          scores[slot(Mode::kAlteredE2E)][i] = predict_case(net, altered_in[i]);
        }
        if (has_mode(config, Mode::kMbda)) {
          scores[slot(Mode::kMbda)][i] = predict_case(net, mbda_in[i]);
        }
      }
    }
    if (need_f2e) {
      const Network net = obtain("f2e", config.f2e_arch, f2e_train_constrained, f2e_train_in, 1);
      for (std::size_t i : fold.test) {
        if (has_mode(config, Mode::kF2EMatched)) {
          scores[slot(Mode::kF2EMatched)][i] = predict_case(net, f2e_train_in[i]);
        }
        if (has_mode(config, Mode::kAlteredF2E)) {
          scores[slot(Mode::kAlteredF2E)][i] = predict_case(net, f2e_test_in[i]);
        }
      }
    }
  });

  ScenarioResult result;
  result.spec = spec;
  for (const auto& c : dataset) {
    result.case_ids.push_back(c.id);
    result.labels.push_back(c.label);
  }
  for (Mode mode : all_modes()) {
    if (!has_mode(config, mode)) continue;
    ModeResult mr;
    mr.mode = mode;
    mr.scores = scores[slot(mode)];
    const ScoredSet pooled{mr.scores, result.labels};
    mr.auc = auc(pooled);
    mr.delong_se = std::sqrt(std::max(0.0, delong_variance(pooled)));
    for (const auto& fold : folds) {
      ScoredSet part;
      for (std::size_t i : fold.test) {
        part.scores.push_back(mr.scores[i]);
        part.labels.push_back(result.labels[i]);
      }
      mr.fold_aucs.push_back(auc(part));
    }
    mr.fold_sd = sample_sd(mr.fold_aucs);
    result.modes.push_back(std::move(mr));
  }

  for (Mode other : {Mode::kAlteredE2E, Mode::kAlteredF2E}) {
    const auto* a = result.find(Mode::kMbda);
    const auto* b = result.find(other);
    if (!a || !b) continue;
    PairTest t{Mode::kMbda, other,
               delong_test(ScoredSet{a->scores, result.labels},
                           ScoredSet{b->scores, result.labels}),
               false};
    result.tests.push_back(t);
  }
  std::vector<ScenarioResult> one{std::move(result)};
  apply_holm(one, config.alpha);
  return std::move(one.front());
}

void apply_holm(std::vector<ScenarioResult>& results, double alpha) {
  std::vector<double> p;
  for (const auto& r : results) {
    for (const auto& t : r.tests) p.push_back(t.comparison.p_two_sided);
  }
  if (p.empty()) return;
  const auto holm = holm_bonferroni(p, alpha);
  std::size_t k = 0;
  for (auto& r : results) {
    for (auto& t : r.tests) t.significant = holm.reject[k++];
  }
}

std::vector<ScenarioResult> run_scenarios(const std::vector<ScenarioSpec>& specs,
                                          const std::vector<LabeledCase>& dataset,
                                          const SplitPlan& split, const FitConfig& fit,
                                          const TrainConfig& train_config,
                                          const ScenarioConfig& config) {
  NetworkCache cache;
  std::vector<ScenarioResult> results;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    logger().info("scenario {}/{}: {{{}}} -> {{{}}}", i + 1, specs.size(),
                  join(specs[i].training), join(specs[i].inference));
    results.push_back(run_scenario(specs[i], dataset, split, fit, train_config, config, &cache));
  }
  apply_holm(results, config.alpha);
  return results;
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  return {{"training", spec.training}, {"inference", spec.inference},
          {"kind", kind_name(spec.kind)}};
}

ScenarioSpec spec_from_json(const nlohmann::json& j) {
  return ScenarioSpec{j.at("training").get<std::vector<double>>(),
                      j.at("inference").get<std::vector<double>>(),
                      parse_kind(j.at("kind").get<std::string>())};
}

nlohmann::json to_json(const ScenarioResult& r) {
  nlohmann::json labels = nlohmann::json::array();
  for (auto l : r.labels) labels.push_back(label_name(l));
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : r.modes) {
    modes.push_back({{"mode", mode_name(m.mode)},
                     {"auc", m.auc},
                     {"delong_se", m.delong_se},
                     {"fold_aucs", m.fold_aucs},
                     {"fold_sd", m.fold_sd},
                     {"scores", m.scores}});
  }
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.tests) {
    const auto& c = t.comparison;
    tests.push_back({{"a", mode_name(t.a)},
                     {"b", mode_name(t.b)},
                     {"auc_a", c.auc_a},
                     {"auc_b", c.auc_b},
                     {"var_a", c.var_a},
                     {"var_b", c.var_b},
                     {"cov_ab", c.cov_ab},
                     {"z", c.z},
                     {"p", c.p_two_sided},
                     {"degenerate", c.degenerate},
                     {"significant", t.significant}});
  }
  return {{"spec", to_json(r.spec)}, {"case_ids", r.case_ids}, {"labels", labels},
          {"modes", modes},          {"tests", tests}};
}

ScenarioResult result_from_json(const nlohmann::json& j) {
  ScenarioResult r;
  r.spec = spec_from_json(j.at("spec"));
  r.case_ids = j.at("case_ids").get<std::vector<std::string>>();
  for (const auto& l : j.at("labels")) r.labels.push_back(parse_label(l.get<std::string>()));
  for (const auto& m : j.at("modes")) {
    ModeResult mr;
    mr.mode = parse_mode(m.at("mode").get<std::string>());
    mr.auc = m.at("auc").get<double>();
    mr.delong_se = m.at("delong_se").get<double>();
    mr.fold_aucs = m.at("fold_aucs").get<std::vector<double>>();
    mr.fold_sd = m.at("fold_sd").get<double>();
    mr.scores = m.at("scores").get<std::vector<double>>();
    r.modes.push_back(std::move(mr));
  }
  for (const auto& t : j.at("tests")) {
    PairTest pt{parse_mode(t.at("a").get<std::string>()),
                parse_mode(t.at("b").get<std::string>()),
                {},
                t.at("significant").get<bool>()};
    auto& c = pt.comparison;
    c.auc_a = t.at("auc_a").get<double>();
    c.auc_b = t.at("auc_b").get<double>();
    c.var_a = t.at("var_a").get<double>();
    c.var_b = t.at("var_b").get<double>();
    c.cov_ab = t.at("cov_ab").get<double>();
    c.z = t.at("z").get<double>();
    c.p_two_sided = t.at("p").get<double>();
    c.degenerate = t.at("degenerate").get<bool>();
    r.tests.push_back(pt);
  }
  return r;
}

std::vector<std::string> training_marks(const ScenarioSpec& spec, const Protocol& full) {
  std::vector<std::string> marks;
  for (double b : full.values()) {
    marks.push_back(std::count(spec.training.begin(), spec.training.end(), b) ? "x" : "");
  }
  return marks;
}

std::vector<std::string> testing_marks(const ScenarioSpec& spec, const Protocol& full) {
  std::vector<std::string> marks;
  for (double b : full.values()) {
    const bool measured = std::count(spec.inference.begin(), spec.inference.end(), b) > 0;
    const bool trained = std::count(spec.training.begin(), spec.training.end(), b) > 0;
    marks.push_back(measured ? "x" : trained ? "o" : "");
  }
  return marks;
}

namespace {

std::string fmt_double(double v, const char* format) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string bname(double b) { return fmt_double(b, "%g"); }

const PairTest* find_test(const ScenarioResult& r, Mode other) {
  for (const auto& t : r.tests) {
    if (t.a == Mode::kMbda && t.b == other) return &t;
  }
  return nullptr;
}

}  // namespace

std::string report_csv(const std::vector<ScenarioResult>& results, const Protocol& full) {
  std::ostringstream os;
  os << "kind";
  for (double b : full.values()) os << ",train_b" << bname(b);
  for (double b : full.values()) os << ",test_b" << bname(b);
  for (Mode m : all_modes()) os << ",auc_" << mode_name(m) << ",sd_" << mode_name(m);
  os << ",p_e2e_mbda,sig_e2e_mbda,p_f2e_mbda,sig_f2e_mbda\n";
  for (const auto& r : results) {
    os << kind_name(r.spec.kind);
    for (const auto& mark : training_marks(r.spec, full)) os << ',' << mark;
    for (const auto& mark : testing_marks(r.spec, full)) os << ',' << mark;
    for (Mode m : all_modes()) {
      if (const auto* mr = r.find(m)) {
        os << ',' << fmt_double(mr->auc, "%.4f") << ',' << fmt_double(mr->fold_sd, "%.4f");
      } else {
        os << ",,";
      }
    }
    for (Mode other : {Mode::kAlteredE2E, Mode::kAlteredF2E}) {
      if (const auto* t = find_test(r, other)) {
        os << ',' << fmt_double(t->comparison.p_two_sided, "%.4g") << ','
           << (t->significant ? "*" : "");
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::json report_json(const std::vector<ScenarioResult>& results, const Protocol& full) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json row = {{"kind", kind_name(r.spec.kind)},
                          {"training", r.spec.training},
                          {"inference", r.spec.inference},
                          {"derived", r.spec.derived()},
                          {"training_marks", training_marks(r.spec, full)},
                          {"testing_marks", testing_marks(r.spec, full)}};
    nlohmann::json modes = nlohmann::json::object();
    for (const auto& m : r.modes) {
      modes[mode_name(m.mode)] = {{"auc", m.auc},
                                  {"fold_sd", m.fold_sd},
                                  {"delong_se", m.delong_se},
                                  {"fold_aucs", m.fold_aucs}};
    }
    row["modes"] = modes;
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : r.tests) {
      tests.push_back({{"pair", std::string(mode_name(t.a)) + ";" + mode_name(t.b)},
                       {"z", t.comparison.z},
                       {"p", t.comparison.p_two_sided},
                       {"degenerate", t.comparison.degenerate},
                       {"significant", t.significant}});
    }
    row["tests"] = tests;
    rows.push_back(row);
  }
  return {{"bvalues", full.values()}, {"rows", rows}};
}

nlohmann::json summary_json(const std::vector<ScenarioResult>& results) {
  nlohmann::json out = nlohmann::json::object();
  for (ScenarioKind kind :
       {ScenarioKind::kShifted, ScenarioKind::kMissing, ScenarioKind::kMatched}) {
    nlohmann::json group = nlohmann::json::object();
    std::size_t rows = 0;
    for (Mode m : all_modes()) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& r : results) {
        if (r.spec.kind != kind) continue;
        if (const auto* mr = r.find(m)) {
          sum += mr->auc;
          ++count;
        }
      }
      if (count) group[mode_name(m)] = sum / static_cast<double>(count);
    }
    for (const auto& r : results) rows += r.spec.kind == kind ? 1 : 0;
    if (rows) {
      group["rows"] = rows;
      out[kind_name(kind)] = group;
    }
  }
  return out;
}

void emit_report(const std::vector<ScenarioResult>& results, const Protocol& full,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "report.csv", report_csv(results, full));
  write_text_file(dir / "report.json", report_json(results, full).dump(2) + "\n");
  write_text_file(dir / "summary.json", summary_json(results).dump(2) + "\n");
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& r : results) raw.push_back(to_json(r));
  write_text_file(dir / "results.json",
                  nlohmann::json{{"bvalues", full.values()}, {"results", raw}}.dump() + "\n");
}

}  // namespace mbda
