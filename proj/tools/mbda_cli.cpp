// mbda command-line front end. Talks to the library only through mbda.h.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbda/mbda.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CliFailure {
  int exit_code;
  std::string message;
};

int exit_code_for(mbda_status s) {
  switch (s) {
    case MBDA_ERR_INVALID_ARGUMENT:
    case MBDA_ERR_VALIDATION:
    case MBDA_ERR_PROTOCOL:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(mbda_status s) {
  if (s != MBDA_OK) {
    throw CliFailure{exit_code_for(s), std::string(mbda_status_name(s)) + ": " + mbda_last_error()};
  }
}

[[noreturn]] void usage_error(const std::string& msg) { throw CliFailure{kExitUsage, msg}; }

struct LibString {
  char* p = nullptr;
  LibString() = default;
  LibString(const LibString&) = delete;
  LibString& operator=(const LibString&) = delete;
  ~LibString() { mbda_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct StackDeleter {
  void operator()(mbda_stack* s) const { mbda_stack_free(s); }
};
using StackPtr = std::unique_ptr<mbda_stack, StackDeleter>;

struct NetworkDeleter {
  void operator()(mbda_network* n) const { mbda_network_free(n); }
};
using NetworkPtr = std::unique_ptr<mbda_network, NetworkDeleter>;

struct Globals {
  int threads = 0;
  std::optional<std::uint64_t> seed;
  int verbose = 0;
  bool quiet = false;
  std::vector<std::string> args;
};

std::vector<double> parse_bvalues(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error("invalid b-value list '" + text + "'");
    }
  }
  if (out.empty()) usage_error("empty b-value list");
  return out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out) throw CliFailure{kExitRuntime, "cannot write " + file.string()};
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CliFailure{kExitRuntime, "cannot read " + file.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Loads a config file (plain config or a run.json written by this tool),
// applies command-line overrides and returns the fully resolved config.
json resolve_config(const Globals& g, const std::string& path,
                    const std::function<void(json&)>& overrides = {}) {
  json j = json::object();
  if (!path.empty()) {
    try {
      j = json::parse(read_text(path));
    } catch (const json::exception& e) {
      usage_error(path + ": " + e.what());
    }
    if (j.is_object() && j.contains("command") && j.contains("config")) j = j.at("config");
  }
  if (!j.is_object()) usage_error("config must be a JSON object");
  if (g.seed) {
    j["seed"] = *g.seed;
    for (const char* section : {"phantom", "train"}) {
      if (j.contains(section) && j[section].is_object()) j[section].erase("seed");
    }
    if (j.contains("scenario") && j["scenario"].is_object()) j["scenario"].erase("split_seed");
  }
  if (g.threads > 0) {
    j["threads"] = g.threads;
  } else if (!j.contains("threads")) {
    j["threads"] = std::max(1u, std::thread::hardware_concurrency());
  }
  if (overrides) overrides(j);
  LibString out;
  check(mbda_config_resolve(j.dump().c_str(), &out.p));
  return json::parse(out.str());
}

void write_run_json(const Globals& g, const fs::path& dir, const json& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliFailure{kExitRuntime, "cannot create " + dir.string() + ": " + ec.message()};
  json run = {{"tool", "mbda"}, {"version", mbda_version()}, {"command", g.args},
              {"config", config}};
  write_text(dir / "run.json", run.dump(2) + "\n");
}

StackPtr load_stack(const std::string& path) {
  mbda_stack* s = nullptr;
  check(mbda_stack_load(path.c_str(), &s));
  return StackPtr(s);
}

struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> scores;
};

ScoreTable read_scores(const std::string& file) {
  std::istringstream in(read_text(file));
  std::string line;
  ScoreTable t;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("id,", 0) == 0) continue;
    }
    std::stringstream ss(line);
    std::string id, label, score;
    if (!std::getline(ss, id, ',') || !std::getline(ss, label, ',') || !std::getline(ss, score)) {
      usage_error(file + ": malformed row '" + line + "'");
    }
    int l = -1;
    if (label == "benign" || label == "0") l = 0;
    if (label == "malignant" || label == "1") l = 1;
    if (l < 0) usage_error(file + ": unknown label '" + label + "'");
    try {
      t.scores.push_back(std::stod(score));
    } catch (const std::exception&) {
      usage_error(file + ": invalid score '" + score + "'");
    }
    t.ids.push_back(id);
    t.labels.push_back(l);
  }
  return t;
}

void add_common(CLI::App& app, Globals& g) {
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Master seed (overrides every seed in the config)");
  app.add_flag("-v,--verbose", g.verbose, "More diagnostics on stderr (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "Only report errors");
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  for (int i = 1; i < argc; ++i) g.args.emplace_back(argv[i]);

  CLI::App app{"Model-based domain adaptation for DWI lesion classification"};
  app.set_version_flag("--version", std::string(mbda_version()));
  app.require_subcommand(1);
  add_common(app, g);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  std::function<void()> action;

  // phantom generate
  auto* phantom = app.add_subcommand("phantom", "Synthetic phantom datasets");
  phantom->require_subcommand(1);
  auto* generate = phantom->add_subcommand("generate", "Generate a labelled phantom dataset");
  std::string gen_config, gen_out;
  std::optional<std::size_t> gen_benign, gen_malignant;
  std::optional<double> gen_noise;
  generate->add_option("--config", gen_config, "Run config JSON");
  generate->add_option("--out", gen_out, "Output dataset directory")->required();
  generate->add_option("--benign", gen_benign, "Number of benign cases");
  generate->add_option("--malignant", gen_malignant, "Number of malignant cases");
  generate->add_option("--noise-sigma", gen_noise, "Rician noise level (fraction of mean s0)");
  generate->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, gen_config, [&](json& j) {
        if (gen_benign) j["phantom"]["n_benign"] = *gen_benign;
        if (gen_malignant) j["phantom"]["n_malignant"] = *gen_malignant;
        if (gen_noise) j["phantom"]["noise_sigma"] = *gen_noise;
      });
      LibString index;
      check(mbda_phantom_generate(cfg.dump().c_str(), gen_out.c_str(), &index.p));
      write_run_json(g, gen_out, cfg);
      const auto idx = json::parse(index.str());
      std::cout << "generated " << idx.at("cases").size() << " cases in " << gen_out << "\n";
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the kurtosis model to every lesion voxel");
  std::string fit_in, fit_out, fit_config;
  bool fit_constrain = false;
  std::optional<double> fit_threshold;
  fit->add_option("--in", fit_in, "Stack directory")->required();
  fit->add_option("--out", fit_out, "Output directory for parameter maps")->required();
  fit->add_option("--config", fit_config, "Run config JSON");
  fit->add_flag("--constrain-akc", fit_constrain, "Fix AKC = 0");
  fit->add_option("--threshold", fit_threshold, "ADC threshold for a malignancy score");
  fit->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, fit_config, [&](json& j) {
        if (fit_constrain) j["fit"]["constrain_akc_zero"] = true;
      });
      auto stack = load_stack(fit_in);
      double adc = 0.0, akc = 0.0;
      check(mbda_fit_roi(stack.get(), cfg.at("fit").dump().c_str(), fit_out.c_str(), &adc, &akc));
      write_run_json(g, fit_out, cfg);
      json out = {{"adc_mean", adc}, {"akc_mean", akc}};
      if (std::isnan(adc)) out = {{"adc_mean", nullptr}, {"akc_mean", nullptr}, {"empty_mask", true}};
      if (fit_threshold && !std::isnan(adc)) {
        out["score"] = mbda_threshold_classify(adc, *fit_threshold, 0.2e-3);
      }
      std::cout << out.dump(2) << "\n";
    };
  });

  // restore
  auto* restore = app.add_subcommand("restore", "Adapt a stack to a training protocol");
  std::string restore_in, restore_out, restore_target, restore_config;
  restore->add_option("--in", restore_in, "Inference stack directory")->required();
  restore->add_option("--target-protocol", restore_target, "Training b-values, e.g. 0,100,750,1500")
      ->required();
  restore->add_option("--out", restore_out, "Output stack directory")->required();
  restore->add_option("--config", restore_config, "Run config JSON");
  restore->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, restore_config);
      const auto target = parse_bvalues(restore_target);
      auto stack = load_stack(restore_in);
      mbda_stack* adapted = nullptr;
      LibString report;
      check(mbda_adapt_stack(stack.get(), target.data(), target.size(),
                             cfg.at("fit").dump().c_str(), &adapted, &report.p));
      StackPtr owned(adapted);
      check(mbda_stack_save(owned.get(), restore_out.c_str(), nullptr));
      write_run_json(g, restore_out, cfg);
      std::cout << report.str() << "\n";
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train a classifier on one fold of a dataset");
  std::string train_dataset, train_out, train_config, train_arch = "e2e", train_protocol;
  int train_fold = 0;
  bool train_constrained = false;
  train->add_option("--dataset", train_dataset, "Dataset directory")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--config", train_config, "Run config JSON");
  train->add_option("--arch", train_arch, "e2e or f2e")->check(CLI::IsMember({"e2e", "f2e"}));
  train->add_option("--protocol", train_protocol, "Training b-values (default: all)");
  train->add_option("--fold", train_fold, "Fold index");
  train->add_flag("--akc-constrained", train_constrained, "Fit AKC = 0 for f2e features");
  train->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, train_config);
      json opt = {{"architecture", train_arch}, {"fold", train_fold},
                  {"akc_constrained", train_constrained}};
      if (!train_protocol.empty()) opt["protocol"] = parse_bvalues(train_protocol);
      mbda_network* net = nullptr;
      check(mbda_network_train(train_dataset.c_str(), cfg.dump().c_str(), opt.dump().c_str(),
                               &net));
      NetworkPtr owned(net);
      write_run_json(g, train_out, cfg);
      const auto file = (fs::path(train_out) / "network.bin").string();
      check(mbda_network_save(owned.get(), file.c_str()));
      LibString info;
      check(mbda_network_info(owned.get(), &info.p));
      write_text(fs::path(train_out) / "network.json", info.str() + "\n");
      std::cout << info.str() << "\n";
    };
  });

  // predict
  auto* predict = app.add_subcommand("predict", "Score dataset cases with a trained network");
  std::string pred_network, pred_dataset, pred_out, pred_config, pred_mode = "matched",
                                                                  pred_inference, pred_kind;
  int pred_fold = -1;
  predict->add_option("--network", pred_network, "network.bin or its directory")->required();
  predict->add_option("--dataset", pred_dataset, "Dataset directory")->required();
  predict->add_option("--out", pred_out, "Output directory")->required();
  predict->add_option("--config", pred_config, "Run config JSON");
  predict->add_option("--mode", pred_mode, "matched, altered or mbda")
      ->check(CLI::IsMember({"matched", "altered", "mbda"}));
  predict->add_option("--inference", pred_inference, "Inference b-values");
  predict->add_option("--kind", pred_kind, "missing or shifted")
      ->check(CLI::IsMember({"missing", "shifted", "matched"}));
  predict->add_option("--fold", pred_fold, "Score only this fold's test cases (-1: all)");
  predict->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, pred_config);
      fs::path net_file = pred_network;
      if (fs::is_directory(net_file)) net_file /= "network.bin";
      mbda_network* net = nullptr;
      check(mbda_network_load(net_file.string().c_str(), &net));
      NetworkPtr owned(net);
      json opt = {{"mode", pred_mode}, {"fold", pred_fold}};
      if (!pred_inference.empty()) opt["inference"] = parse_bvalues(pred_inference);
      if (!pred_kind.empty()) opt["kind"] = pred_kind;
      LibString csv;
      check(mbda_network_predict_dataset(owned.get(), pred_dataset.c_str(), cfg.dump().c_str(),
                                         opt.dump().c_str(), &csv.p));
      write_run_json(g, pred_out, cfg);
      write_text(fs::path(pred_out) / "scores.csv", csv.str());
      std::cout << "wrote " << (fs::path(pred_out) / "scores.csv").string() << "\n";
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "AUC and DeLong comparisons of score files");
  std::string eval_scores, eval_out;
  std::vector<std::string> eval_compare;
  double eval_alpha = 0.05;
  evaluate->add_option("--scores", eval_scores, "Scores CSV (id,label,score)")->required();
  evaluate->add_option("--compare", eval_compare, "Scores CSV to compare against (repeatable)");
  evaluate->add_option("--alpha", eval_alpha, "Family-wise significance level");
  evaluate->add_option("--out", eval_out, "Output directory");
  evaluate->callback([&] {
    action = [&] {
      if (!(eval_alpha > 0.0 && eval_alpha < 1.0)) usage_error("--alpha must be in (0,1)");
      const auto base = read_scores(eval_scores);
      const auto n = base.scores.size();
      double a = 0.0, var = 0.0;
      check(mbda_auc(base.scores.data(), base.labels.data(), n, &a));
      check(mbda_delong_variance(base.scores.data(), base.labels.data(), n, &var));
      json out = {{"scores", eval_scores}, {"n", n}, {"auc", a},
                  {"delong_se", var > 0.0 ? std::sqrt(var) : 0.0}, {"alpha", eval_alpha}};
      std::vector<double> pvalues;
      json comparisons = json::array();
      for (const auto& file : eval_compare) {
        const auto other = read_scores(file);
        if (other.ids != base.ids || other.labels != base.labels) {
          usage_error(file + ": cases or labels differ from " + eval_scores);
        }
        mbda_delong d{};
        check(mbda_delong_test(base.scores.data(), other.scores.data(), base.labels.data(), n,
                               &d));
        pvalues.push_back(d.p_two_sided);
        comparisons.push_back({{"scores", file}, {"auc_a", d.auc_a}, {"auc_b", d.auc_b},
                               {"z", d.z}, {"p", d.p_two_sided},
                               {"degenerate", d.degenerate != 0}});
      }
      if (!pvalues.empty()) {
        std::vector<int> reject(pvalues.size());
        check(mbda_holm_bonferroni(pvalues.data(), pvalues.size(), eval_alpha, reject.data()));
        for (std::size_t i = 0; i < reject.size(); ++i) {
          comparisons[i]["significant"] = reject[i] != 0;
        }
      }
      out["comparisons"] = comparisons;
      if (!eval_out.empty()) {
        write_run_json(g, eval_out, json{{"alpha", eval_alpha}});
        write_text(fs::path(eval_out) / "evaluation.json", out.dump(2) + "\n");
      }
      std::cout << out.dump(2) << "\n";
    };
  });

  // scenario enumerate / run
  auto* scenario = app.add_subcommand("scenario", "Missing and shifted b-value scenarios");
  scenario->require_subcommand(1);
  auto* enumerate = scenario->add_subcommand("enumerate", "List the scenario matrix");
  std::string enum_protocol = "0,100,750,1500", enum_kind;
  enumerate->add_option("--protocol", enum_protocol, "Full acquisition protocol");
  enumerate->add_option("--kind", enum_kind, "missing or shifted")
      ->required()
      ->check(CLI::IsMember({"missing", "shifted"}));
  enumerate->callback([&] {
    action = [&] {
      const auto full = parse_bvalues(enum_protocol);
      LibString rows;
      check(mbda_scenario_enumerate(full.data(), full.size(), enum_kind.c_str(), &rows.p));
      std::cout << rows.str() << "\n";
    };
  });

  auto* srun = scenario->add_subcommand("run", "Cross-validated evaluation of a scenario matrix");
  std::string run_dataset, run_kind, run_config, run_out, run_training, run_inference, run_modes,
      run_fill;
  srun->add_option("--dataset", run_dataset, "Dataset directory")->required();
  srun->add_option("--kind", run_kind, "missing or shifted")
      ->required()
      ->check(CLI::IsMember({"missing", "shifted", "matched"}));
  srun->add_option("--config", run_config, "Run config JSON");
  srun->add_option("--out", run_out, "Output directory")->required();
  srun->add_option("--training", run_training, "Run a single row: training b-values");
  srun->add_option("--inference", run_inference, "Run a single row: inference b-values");
  srun->add_option("--modes", run_modes, "Comma-separated modes to evaluate");
  srun->add_option("--missing-fill", run_fill, "nearest or zero")
      ->check(CLI::IsMember({"nearest", "zero"}));
  srun->callback([&] {
    action = [&] {
      const auto cfg = resolve_config(g, run_config, [&](json& j) {
        if (!run_modes.empty()) {
          json modes = json::array();
          std::stringstream ss(run_modes);
          std::string m;
          while (std::getline(ss, m, ',')) modes.push_back(m);
          j["scenario"]["modes"] = modes;
        }
        if (!run_fill.empty()) j["scenario"]["missing_fill"] = run_fill;
      });
      json opt = {{"kind", run_kind}};
      if (run_training.empty() != run_inference.empty()) {
        usage_error("--training and --inference must be given together");
      }
      if (!run_training.empty()) {
        opt["training"] = parse_bvalues(run_training);
        opt["inference"] = parse_bvalues(run_inference);
      }
      write_run_json(g, run_out, cfg);
      check(mbda_scenario_run(run_dataset.c_str(), cfg.dump().c_str(), opt.dump().c_str(),
                              run_out.c_str()));
      std::cout << read_text(fs::path(run_out) / "summary.json");
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Regenerate report files from results.json");
  std::string report_in, report_out;
  report->add_option("--in", report_in, "results.json or the directory holding it")->required();
  report->add_option("--out", report_out, "Output directory")->required();
  report->callback([&] {
    action = [&] {
      fs::path in = report_in;
      if (fs::is_directory(in)) in /= "results.json";
      check(mbda_report_emit(in.string().c_str(), report_out.c_str()));
      write_run_json(g, report_out, json{{"results", in.string()}});
      std::cout << "wrote " << report_out << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (g.quiet) {
    mbda_set_log_level(MBDA_LOG_ERROR);
  } else if (g.verbose >= 2) {
    mbda_set_log_level(MBDA_LOG_DEBUG);
  } else if (g.verbose == 1) {
    mbda_set_log_level(MBDA_LOG_INFO);
  }

  try {
    if (action) action();
  } catch (const CliFailure& f) {
    std::cerr << "mbda: " << f.message << "\n";
    return f.exit_code;
  } catch (const json::exception& e) {
    std::cerr << "mbda: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "mbda: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
