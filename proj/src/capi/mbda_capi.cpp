#include "mbda/mbda.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/adapt.hpp"
#include "core/config.hpp"
#include "core/dki.hpp"
#include "core/dwi.hpp"
#include "core/error.hpp"
#include "core/log.hpp"
#include "core/network.hpp"
#include "core/phantom.hpp"
#include "core/scenario.hpp"
#include "core/stats.hpp"
#include "core/training.hpp"

struct mbda_stack {
  mbda::DwiStack stack;
  mbda::StackMeta meta;
};

struct mbda_network {
  mbda::Network net;
};

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

struct BufferTooSmall : std::runtime_error {
  BufferTooSmall() : std::runtime_error("output buffer too small") {}
};

mbda_status set_error(mbda_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
mbda_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MBDA_OK;
  } catch (const mbda::Error& e) {
    return set_error(static_cast<mbda_status>(static_cast<int>(e.code())), e.what());
  } catch (const BufferTooSmall& e) {
    return set_error(MBDA_ERR_BUFFER_TOO_SMALL, e.what());
  } catch (const json::exception& e) {
    return set_error(MBDA_ERR_FORMAT, e.what());
  } catch (const fs::filesystem_error& e) {
    return set_error(MBDA_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(MBDA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MBDA_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MBDA_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) mbda::fail(mbda::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json_arg(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    mbda::fail(mbda::ErrorCode::kValidationError, std::string(what) + ": " + e.what());
  }
}

mbda::RunConfig run_config(const char* text) {
  return mbda::run_config_from_json(parse_json_arg(text, "config"));
}

mbda::FitConfig fit_config(const char* text) {
  mbda::FitConfig cfg;
  mbda::merge(cfg, parse_json_arg(text, "fit config"));
  cfg.validate();
  return cfg;
}

std::vector<double> values(const double* p, std::size_t n) {
  require(p || n == 0, "null b-value array");
  return std::vector<double>(p, p + n);
}

mbda::ScoredSet scored(const double* scores, const int* labels, std::size_t n) {
  require(scores && labels, "null scores or labels");
  mbda::ScoredSet set;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      mbda::fail(mbda::ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
    set.scores.push_back(scores[i]);
    set.labels.push_back(static_cast<mbda::Label>(labels[i]));
  }
  return set;
}

mbda::DkiParams to_params(const mbda_dki_params* p) {
  require(p != nullptr, "null params");
  return {p->s0, p->adc, p->akc, p->theta};
}

template <typename T>
T option(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    mbda::fail(mbda::ErrorCode::kValidationError, std::string("option ") + key + ": " + e.what());
  }
}

void check_options(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) mbda::fail(mbda::ErrorCode::kValidationError, "options: expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) mbda::fail(mbda::ErrorCode::kValidationError, "options: unknown key '" + key + "'");
  }
}

std::vector<mbda::Label> labels_of(const std::vector<mbda::LabeledCase>& cases) {
  std::vector<mbda::Label> out;
  for (const auto& c : cases) out.push_back(c.label);
  return out;
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

extern "C" {

const char* mbda_version(void) { return "1.0.0"; }

const char* mbda_status_name(mbda_status status) {
  switch (status) {
    case MBDA_OK: return "OK";
    case MBDA_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case MBDA_ERR_INTERNAL: return "Internal";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= 19) {
    return mbda::error_code_name(static_cast<mbda::ErrorCode>(code));
  }
  return "Unknown";
}

const char* mbda_last_error(void) { return g_last_error.c_str(); }

void mbda_string_free(char* str) { std::free(str); }

void mbda_set_log_level(mbda_log_level level) {
  mbda::set_log_level(static_cast<spdlog::level::level_enum>(level));
}

mbda_status mbda_config_resolve(const char* config_json, char** resolved_json) {
  return guarded([&] {
    require(resolved_json != nullptr, "null output");
    *resolved_json = dup_string(mbda::to_json(run_config(config_json)).dump(2));
  });
}

// ---- stacks

mbda_status mbda_stack_load(const char* path, mbda_stack** out) {
  return guarded([&] {
    require(path && out, "null argument");
    mbda::StackMeta meta;
    auto stack = mbda::load_stack(path, meta);
    *out = new mbda_stack{std::move(stack), std::move(meta)};
  });
}

mbda_status mbda_stack_save(const mbda_stack* stack, const char* dir, const char* meta_json) {
  return guarded([&] {
    require(stack && dir, "null argument");
    mbda::StackMeta meta = stack->meta;
    if (meta_json && *meta_json) {
      json j = parse_json_arg(meta_json, "meta");
      if (!j.is_object()) mbda::fail(mbda::ErrorCode::kValidationError, "meta: expected an object");
      if (j.contains("id")) meta.id = j.at("id").get<std::string>();
      if (j.contains("label")) meta.label = mbda::parse_label(j.at("label").get<std::string>());
      j.erase("id");
      j.erase("label");
      for (const auto& [key, value] : j.items()) meta.extra[key] = value;
    }
    mbda::save_stack(stack->stack, dir, meta);
  });
}

void mbda_stack_free(mbda_stack* stack) { delete stack; }

mbda_status mbda_stack_shape(const mbda_stack* stack, size_t* width, size_t* height,
                             size_t* n_bvalues) {
  return guarded([&] {
    require(stack != nullptr, "null stack");
    if (width) *width = stack->stack.width();
    if (height) *height = stack->stack.height();
    if (n_bvalues) *n_bvalues = stack->stack.protocol().size();
  });
}

mbda_status mbda_stack_bvalues(const mbda_stack* stack, double* out, size_t capacity) {
  return guarded([&] {
    require(stack && out, "null argument");
    const auto b = stack->stack.protocol().values();
    if (capacity < b.size()) throw BufferTooSmall();
    std::copy(b.begin(), b.end(), out);
  });
}

mbda_status mbda_stack_theta(const mbda_stack* stack, double* theta) {
  return guarded([&] {
    require(stack && theta, "null argument");
    *theta = stack->stack.theta();
  });
}

mbda_status mbda_stack_plane(const mbda_stack* stack, size_t index, float* out,
                             size_t capacity) {
  return guarded([&] {
    require(stack && out, "null argument");
    require(index < stack->stack.planes().size(), "plane index out of range");
    const auto data = stack->stack.plane(index).data();
    if (capacity < data.size()) throw BufferTooSmall();
    std::copy(data.begin(), data.end(), out);
  });
}

mbda_status mbda_stack_lesion_mask(const mbda_stack* stack, uint8_t* out, size_t capacity) {
  return guarded([&] {
    require(stack && out, "null argument");
    const auto data = stack->stack.lesion_mask().data();
    if (capacity < data.size()) throw BufferTooSmall();
    std::copy(data.begin(), data.end(), out);
  });
}

mbda_status mbda_stack_meta(const mbda_stack* stack, char** json_out) {
  return guarded([&] {
    require(stack && json_out, "null argument");
    json j = stack->meta.extra;
    j["id"] = stack->meta.id;
    if (stack->meta.label) j["label"] = mbda::label_name(*stack->meta.label);
    *json_out = dup_string(j.dump(2));
  });
}

mbda_status mbda_stack_subset(const mbda_stack* stack, const double* keep, size_t n,
                              mbda_stack** out) {
  return guarded([&] {
    require(stack && out, "null argument");
    const auto protocol = mbda::Protocol::from_values(values(keep, n));
    *out = new mbda_stack{mbda::subset_protocol(stack->stack, protocol), stack->meta};
  });
}

// ---- signal model

double mbda_forward_signal(const mbda_dki_params* params, double b) {
  if (!params) return std::numeric_limits<double>::quiet_NaN();
  return mbda::forward_signal(to_params(params), b);
}

mbda_status mbda_forward_jacobian(const mbda_dki_params* params, double b, double out[3]) {
  return guarded([&] {
    require(out != nullptr, "null output");
    const auto j = mbda::forward_jacobian(to_params(params), b);
    std::copy(j.begin(), j.end(), out);
  });
}

mbda_status mbda_fit_voxel(const double* bvalues, const double* signals, size_t n, double theta,
                           const char* fit_config_json, mbda_fit_result* out) {
  return guarded([&] {
    require(bvalues && signals && out, "null argument");
    std::vector<mbda::Sample> samples;
    for (size_t i = 0; i < n; ++i) samples.push_back({bvalues[i], signals[i]});
    const auto r = mbda::fit_voxel(samples, theta, fit_config(fit_config_json));
    out->params = {r.params.s0, r.params.adc, r.params.akc, r.params.theta};
    out->residual_norm = r.residual_norm;
    out->iterations = r.iterations;
    out->converged = r.converged ? 1 : 0;
  });
}

mbda_status mbda_fit_roi(const mbda_stack* stack, const char* fit_config_json,
                         const char* out_dir, double* adc_mean, double* akc_mean) {
  return guarded([&] {
    require(stack != nullptr, "null stack");
    const auto cfg =
        mbda::adaptation_fit_config(fit_config(fit_config_json), stack->stack.protocol().size());
    const auto maps = mbda::fit_roi(stack->stack, cfg);
    double adc = std::numeric_limits<double>::quiet_NaN();
    double akc = adc;
    if (!maps.mask.empty()) {
      const auto roi = mbda::roi_mean_coefficients(maps);
      adc = roi.adc_mean;
      akc = roi.akc_mean;
    }
    if (out_dir) {
      json prov = {{"source_id", stack->meta.id},
                   {"protocol", stack->stack.protocol().values()},
                   {"theta", stack->stack.theta()},
                   {"fit", mbda::to_json(cfg)}};
      if (stack->meta.label) prov["label"] = mbda::label_name(*stack->meta.label);
      if (!maps.mask.empty()) prov["roi"] = {{"adc_mean", adc}, {"akc_mean", akc}};
      mbda::save_parameter_maps(maps, out_dir, prov);
    }
    if (adc_mean) *adc_mean = adc;
    if (akc_mean) *akc_mean = akc;
  });
}

double mbda_threshold_classify(double adc_mean, double threshold, double width) {
  return mbda::threshold_classify(adc_mean, threshold, width);
}

// ---- adaptation

mbda_status mbda_restore_channel(const mbda_stack* stack, double target_b,
                                 const char* fit_config_json, float* out, size_t capacity) {
  return guarded([&] {
    require(stack && out, "null argument");
    const auto plane =
        mbda::restore_channel(stack->stack, mbda::BValue(target_b), fit_config(fit_config_json));
    if (capacity < plane.size()) throw BufferTooSmall();
    std::copy(plane.data().begin(), plane.data().end(), out);
  });
}

mbda_status mbda_adapt_stack(const mbda_stack* inference, const double* training,
                             size_t n_training, const char* fit_config_json, mbda_stack** out,
                             char** report_json) {
  return guarded([&] {
    require(inference && out, "null argument");
    const auto protocol = mbda::Protocol::from_values(values(training, n_training));
    const auto cfg = fit_config(fit_config_json);
    auto adapted = mbda::adapt_stack(inference->stack, protocol, cfg);
    mbda::StackMeta meta = inference->meta;
    meta.extra["adaptation"] = adapted.report.to_json();
    meta.extra["adaptation"]["source_protocol"] = inference->stack.protocol().values();
    meta.extra["adaptation"]["fit"] =
        mbda::to_json(mbda::adaptation_fit_config(cfg, inference->stack.protocol().size()));
    std::string report = adapted.report.to_json().dump(2);
    *out = new mbda_stack{std::move(adapted.stack), std::move(meta)};
    if (report_json) *report_json = dup_string(report);
  });
}

// ---- phantoms

mbda_status mbda_phantom_generate(const char* config_json, const char* out_dir,
                                  char** index_json) {
  return guarded([&] {
    require(out_dir != nullptr, "null output directory");
    const auto cfg = run_config(config_json);
    std::vector<mbda::PhantomTruth> truths;
    const auto cases =
        mbda::generate_dataset(cfg.phantom, cfg.n_benign, cfg.n_malignant, &truths);
    json phantom = mbda::to_json(cfg.phantom);
    phantom["n_benign"] = cfg.n_benign;
    phantom["n_malignant"] = cfg.n_malignant;
    mbda::save_dataset(cases, out_dir, {{"generator", "phantom"}, {"phantom", phantom}});
    json truth = json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& t = truths[i];
      truth.push_back({{"id", cases[i].id},
                       {"label", mbda::label_name(cases[i].label)},
                       {"s0", t.tissue.s0},
                       {"adc", t.tissue.adc},
                       {"akc", t.tissue.akc},
                       {"theta", t.tissue.theta},
                       {"empty_lesion", t.empty_lesion}});
    }
    mbda::write_text_file(fs::path(out_dir) / "truth.json", truth.dump(2) + "\n");
    if (index_json) {
      *index_json = dup_string(mbda::read_json_file(fs::path(out_dir) / "dataset.json").dump(2));
    }
  });
}

// ---- classifier

namespace {

struct PredictSetup {
  std::vector<mbda::LabeledCase> cases;
  std::vector<std::size_t> selected;
};

PredictSetup select_cases(const char* dataset_dir, const mbda::RunConfig& cfg, int fold) {
  PredictSetup s;
  s.cases = mbda::load_dataset(dataset_dir);
  if (fold < 0) {
    for (std::size_t i = 0; i < s.cases.size(); ++i) s.selected.push_back(i);
    return s;
  }
  const auto labels = labels_of(s.cases);
  const auto plan = mbda::make_splits(labels, cfg.scenario.split_seed, cfg.scenario.folds);
  if (fold >= static_cast<int>(plan.folds.size())) {
    mbda::fail(mbda::ErrorCode::kValidationError, "fold out of range");
  }
  s.selected = plan.folds[static_cast<std::size_t>(fold)].test;
  std::sort(s.selected.begin(), s.selected.end());
  return s;
}

}  // namespace

mbda_status mbda_network_train(const char* dataset_dir, const char* config_json,
                               const char* options_json, mbda_network** out) {
  return guarded([&] {
    require(dataset_dir && out, "null argument");
    const auto cfg = run_config(config_json);
    const json opt = parse_json_arg(options_json, "options");
    check_options(opt, {"architecture", "protocol", "fold", "akc_constrained"});
    const auto family = option<std::string>(opt, "architecture", "e2e");
    if (family != "e2e" && family != "f2e") {
      mbda::fail(mbda::ErrorCode::kValidationError, "architecture must be 'e2e' or 'f2e'");
    }
    const int fold = option<int>(opt, "fold", 0);
    const auto cases = mbda::load_dataset(dataset_dir);
    require(!cases.empty(), "empty dataset");
    const auto protocol = mbda::Protocol::from_values(
        option<std::vector<double>>(opt, "protocol", cases.front().stack.protocol().values()));
    const bool constrained =
        family == "f2e" && (protocol.size() == 2 || option<bool>(opt, "akc_constrained", false));

    const auto plan = mbda::make_splits(labels_of(cases), cfg.scenario.split_seed,
                                        cfg.scenario.folds);
    if (fold < 0 || fold >= static_cast<int>(plan.folds.size())) {
      mbda::fail(mbda::ErrorCode::kValidationError, "fold out of range");
    }
    mbda::FitConfig fit = cfg.fit;
    fit.constrain_akc_zero = fit.constrain_akc_zero || constrained;
    auto make = [&](const std::vector<std::size_t>& idx) {
      std::vector<mbda::TrainingSample> samples;
      for (std::size_t i : idx) {
        const auto sub = mbda::subset_protocol(cases[i].stack, protocol);
        samples.push_back({cases[i].id,
                           family == "e2e" ? mbda::make_e2e_input(sub)
                                           : mbda::make_f2e_input(mbda::fit_roi(sub, fit, cfg.threads)),
                           cases[i].label});
      }
      return samples;
    };
    const auto& f = plan.folds[static_cast<std::size_t>(fold)];
    auto arch = family == "e2e" ? cfg.scenario.e2e_arch : cfg.scenario.f2e_arch;
    if (family == "e2e") arch.input_channels = static_cast<int>(protocol.size());
    auto net = mbda::train(make(f.train), make(f.validation), arch, cfg.train);
    net.info.protocol = protocol.values();
    net.info.akc_constrained = constrained;
    *out = new mbda_network{std::move(net)};
  });
}

mbda_status mbda_network_load(const char* file, mbda_network** out) {
  return guarded([&] {
    require(file && out, "null argument");
    *out = new mbda_network{mbda::load_network(file)};
  });
}

mbda_status mbda_network_save(const mbda_network* net, const char* file) {
  return guarded([&] {
    require(net && file, "null argument");
    mbda::save_network(net->net, file);
  });
}

void mbda_network_free(mbda_network* net) { delete net; }

mbda_status mbda_network_info(const mbda_network* net, char** json_out) {
  return guarded([&] {
    require(net && json_out, "null argument");
    const auto& info = net->net.info;
    json j = {{"architecture", mbda::to_json(net->net.arch)},
              {"family", net->net.arch.is_f2e() ? "f2e" : "e2e"},
              {"parameter_count", net->net.params.size()},
              {"training",
               {{"seed", info.seed},
                {"epochs_run", info.epochs_run},
                {"selected_epoch", info.selected_epoch},
                {"selected_validation_error", info.selected_validation_error},
                {"protocol", info.protocol},
                {"akc_constrained", info.akc_constrained}}}};
    *json_out = dup_string(j.dump(2));
  });
}

mbda_status mbda_network_predict_dataset(const mbda_network* handle, const char* dataset_dir,
                                         const char* config_json, const char* options_json,
                                         char** csv_out) {
  return guarded([&] {
    require(handle && dataset_dir && csv_out, "null argument");
    const auto& net = handle->net;
    if (net.info.protocol.empty()) {
      mbda::fail(mbda::ErrorCode::kFormatError, "network does not record its training protocol");
    }
    const auto cfg = run_config(config_json);
    const json opt = parse_json_arg(options_json, "options");
    check_options(opt, {"mode", "inference", "kind", "fold"});
    const auto mode = option<std::string>(opt, "mode", "matched");
    const auto training = mbda::Protocol::from_values(net.info.protocol);
    const auto inference = mbda::Protocol::from_values(
        option<std::vector<double>>(opt, "inference", net.info.protocol));
    mbda::ScenarioKind kind = mbda::ScenarioKind::kMatched;
    if (opt.contains("kind")) {
      kind = mbda::parse_kind(option<std::string>(opt, "kind", ""));
    } else if (!(inference == training)) {
      bool subset = true;
      for (const auto& b : inference.bvalues()) subset = subset && training.contains(b);
      kind = subset ? mbda::ScenarioKind::kMissing : mbda::ScenarioKind::kShifted;
    }
    const bool f2e = net.arch.is_f2e();
    if (mode != "matched" && mode != "altered" && mode != "mbda") {
      mbda::fail(mbda::ErrorCode::kValidationError, "mode must be matched, altered or mbda");
    }
    if (f2e && mode == "mbda") {
      mbda::fail(mbda::ErrorCode::kValidationError, "mbda mode needs an e2e network");
    }
    const auto setup = select_cases(dataset_dir, cfg, option<int>(opt, "fold", -1));
    mbda::FitConfig fit = cfg.fit;
    std::ostringstream csv;
    csv << "id,label,score\n";
    for (std::size_t i : setup.selected) {
      const auto& c = setup.cases[i];
      double score = 0.0;
      if (f2e) {
        const auto& protocol = mode == "matched" ? training : inference;
        auto f = mbda::adaptation_fit_config(fit, protocol.size());
        f.constrain_akc_zero = f.constrain_akc_zero || net.info.akc_constrained;
        const auto sub = mbda::subset_protocol(c.stack, protocol);
        score = mbda::predict_case(net, mbda::make_f2e_input(mbda::fit_roi(sub, f, cfg.threads)));
      } else if (mode == "matched") {
        score = mbda::predict_case(net, mbda::make_e2e_input(mbda::subset_protocol(c.stack, training)));
      } else if (mode == "altered") {
        const auto sub = mbda::subset_protocol(c.stack, inference);
        const auto planes = mbda::altered_channels(sub, net.info.protocol, kind,
                                                   cfg.scenario.missing_fill);
        score = mbda::predict_case(net, mbda::make_e2e_input(planes, sub));
      } else {
        const auto sub = mbda::subset_protocol(c.stack, inference);
        score = mbda::predict_case(
            net, mbda::make_e2e_input(mbda::adapt_stack(sub, training, fit, cfg.threads).stack));
      }
      csv << c.id << ',' << mbda::label_name(c.label) << ',' << format_score(score) << '\n';
    }
    *csv_out = dup_string(csv.str());
  });
}

// ---- statistics

mbda_status mbda_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = mbda::auc(scored(scores, labels, n));
  });
}

mbda_status mbda_delong_variance(const double* scores, const int* labels, size_t n,
                                 double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = mbda::delong_variance(scored(scores, labels, n));
  });
}

mbda_status mbda_delong_test(const double* scores_a, const double* scores_b, const int* labels,
                             size_t n, mbda_delong* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    const auto r = mbda::delong_test(scored(scores_a, labels, n), scored(scores_b, labels, n));
    *out = {r.auc_a, r.auc_b, r.var_a, r.var_b, r.cov_ab, r.z, r.p_two_sided,
            r.degenerate ? 1 : 0};
  });
}

mbda_status mbda_holm_bonferroni(const double* pvalues, size_t n, double alpha, int* reject) {
  return guarded([&] {
    require((pvalues && reject) || n == 0, "null argument");
    const auto r = mbda::holm_bonferroni(std::vector<double>(pvalues, pvalues + n), alpha);
    for (size_t i = 0; i < n; ++i) reject[i] = r.reject[i] ? 1 : 0;
  });
}

// ---- scenarios

mbda_status mbda_scenario_enumerate(const double* full_protocol, size_t n, const char* kind,
                                    char** json_out) {
  return guarded([&] {
    require(kind && json_out, "null argument");
    const auto full = mbda::Protocol::from_values(values(full_protocol, n));
    json rows = json::array();
    for (const auto& s : mbda::enumerate_scenarios(full, mbda::parse_kind(kind))) {
      rows.push_back(mbda::to_json(s));
    }
    *json_out = dup_string(rows.dump(2));
  });
}

mbda_status mbda_scenario_run(const char* dataset_dir, const char* config_json,
                              const char* options_json, const char* out_dir) {
  return guarded([&] {
    require(dataset_dir && out_dir, "null argument");
    const auto cfg = run_config(config_json);
    const json opt = parse_json_arg(options_json, "options");
    check_options(opt, {"kind", "training", "inference"});
    const auto kind = mbda::parse_kind(option<std::string>(opt, "kind", "missing"));
    const auto cases = mbda::load_dataset(dataset_dir);
    require(!cases.empty(), "empty dataset");
    const auto full = cases.front().stack.protocol();
    for (const auto& c : cases) {
      if (!(c.stack.protocol() == full)) {
        mbda::fail(mbda::ErrorCode::kProtocolError, c.id + ": protocol differs from the dataset");
      }
    }
    const auto split = mbda::make_splits(labels_of(cases), cfg.scenario.split_seed,
                                         cfg.scenario.folds);
    std::vector<mbda::ScenarioResult> results;
    if (opt.contains("training") || opt.contains("inference")) {
      if (!opt.contains("training") || !opt.contains("inference")) {
        mbda::fail(mbda::ErrorCode::kValidationError,
                   "options: training and inference must be given together");
      }
      const mbda::ScenarioSpec spec{option<std::vector<double>>(opt, "training", {}),
                                    option<std::vector<double>>(opt, "inference", {}), kind};
      results.push_back(
          mbda::run_scenario(spec, cases, split, cfg.fit, cfg.train, cfg.scenario));
    } else {
      const auto specs = mbda::enumerate_scenarios(full, kind);
      if (specs.empty()) mbda::fail(mbda::ErrorCode::kValidationError, "no scenarios to run");
      results = mbda::run_scenarios(specs, cases, split, cfg.fit, cfg.train, cfg.scenario);
    }
    mbda::emit_report(results, full, out_dir);
  });
}

mbda_status mbda_report_emit(const char* results_json, const char* out_dir) {
  return guarded([&] {
    require(results_json && out_dir, "null argument");
    const auto j = mbda::read_json_file(results_json);
    const auto full = mbda::Protocol::from_values(j.at("bvalues").get<std::vector<double>>());
    std::vector<mbda::ScenarioResult> results;
    for (const auto& r : j.at("results")) results.push_back(mbda::result_from_json(r));
    mbda::emit_report(results, full, out_dir);
  });
}

}  // extern "C"
