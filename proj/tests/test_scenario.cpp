#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/phantom.hpp"
#include "core/scenario.hpp"
#include "support/fixtures.hpp"

using namespace mbda;

namespace {

const Protocol kFull = Protocol::from_values(std::vector<double>{0, 100, 750, 1500});

using Rows = std::vector<std::pair<std::vector<double>, std::vector<double>>>;

Rows rows_of(const std::vector<ScenarioSpec>& specs) {
  Rows out;
  for (const auto& s : specs) out.emplace_back(s.training, s.inference);
  return out;
}

std::vector<LabeledCase> small_dataset(std::size_t per_class, std::uint64_t seed) {
  PhantomConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.seed = seed;
  return generate_dataset(cfg, per_class, per_class);
}

SplitPlan split_for(const std::vector<LabeledCase>& cases, std::uint64_t seed) {
  std::vector<Label> labels;
  for (const auto& c : cases) labels.push_back(c.label);
  return make_splits(labels, seed);
}

TrainConfig quick_training() {
  TrainConfig t;
  t.max_epochs = 15;
  t.learning_rate = 5e-3;
  t.batch_size = 4;
  return t;
}

ScenarioConfig quick_config(std::vector<Mode> modes) {
  ScenarioConfig c;
  c.modes = std::move(modes);
  c.e2e_arch.exploit_widths = {4};
  c.e2e_arch.feature_widths = {6};
  c.f2e_arch.feature_widths = {6};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Enumerate, MissingRows) {
  const auto specs = enumerate_scenarios(kFull, ScenarioKind::kMissing);
  ASSERT_EQ(specs.size(), 9u);
  const Rows want{
      {{0, 100, 750, 1500}, {0, 100, 750}}, {{0, 100, 750, 1500}, {0, 100, 1500}},
      {{0, 100, 750, 1500}, {0, 750, 1500}}, {{0, 100, 750}, {0, 100}},
      {{0, 100, 750}, {0, 750}},            {{0, 100, 1500}, {0, 100}},
      {{0, 100, 1500}, {0, 1500}},          {{0, 750, 1500}, {0, 750}},
      {{0, 750, 1500}, {0, 1500}}};
  EXPECT_EQ(rows_of(specs), want);
  for (const auto& s : specs) {
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.kind, ScenarioKind::kMissing);
  }
}

TEST(Enumerate, ShiftedRows) {
  const auto specs = enumerate_scenarios(kFull, ScenarioKind::kShifted);
  ASSERT_EQ(specs.size(), 12u);
  const auto rows = rows_of(specs);
  EXPECT_EQ(rows[0], (Rows::value_type{{0, 100, 750}, {0, 100, 1500}}));
  EXPECT_EQ(rows[1], (Rows::value_type{{0, 100, 750}, {0, 750, 1500}}));
  EXPECT_EQ(rows[6], (Rows::value_type{{0, 100}, {0, 750}}));
  EXPECT_EQ(rows[11], (Rows::value_type{{0, 1500}, {0, 750}}));
  for (const auto& s : specs) {
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.derived().size(), 1u);
    EXPECT_EQ(s.training.front(), 0.0);
    EXPECT_EQ(s.inference.front(), 0.0);
  }
}

TEST(Enumerate, TwoElementMissingHasNoRows) {
  const auto two = scenarios_for_training(kFull, {0, 750}, ScenarioKind::kMissing);
  EXPECT_TRUE(two.empty());
  EXPECT_EQ(scenarios_for_training(kFull, {0, 750}, ScenarioKind::kShifted).size(), 2u);
  EXPECT_TRUE(enumerate_scenarios(kFull, ScenarioKind::kMatched).empty());
}

TEST(Enumerate, InvalidSpecsRejected) {
  EXPECT_THROW((ScenarioSpec{{0, 100, 750}, {0, 100, 750}, ScenarioKind::kMissing}.validate()),
               Error);
  EXPECT_THROW((ScenarioSpec{{0, 100, 750}, {0, 100, 1500}, ScenarioKind::kMissing}.validate()),
               Error);
  EXPECT_THROW((ScenarioSpec{{0, 100}, {0, 750, 1500}, ScenarioKind::kShifted}.validate()), Error);
  EXPECT_NO_THROW((ScenarioSpec{{0, 100}, {0, 100}, ScenarioKind::kMatched}.validate()));
}

TEST(Marks, TrainingAndTesting) {
  const ScenarioSpec missing{{0, 100, 750, 1500}, {0, 100, 1500}, ScenarioKind::kMissing};
  EXPECT_EQ(training_marks(missing, kFull), (std::vector<std::string>{"x", "x", "x", "x"}));
  EXPECT_EQ(testing_marks(missing, kFull), (std::vector<std::string>{"x", "x", "o", "x"}));
  const ScenarioSpec shifted{{0, 100, 750}, {0, 100, 1500}, ScenarioKind::kShifted};
  EXPECT_EQ(training_marks(shifted, kFull), (std::vector<std::string>{"x", "x", "x", ""}));
  EXPECT_EQ(testing_marks(shifted, kFull), (std::vector<std::string>{"x", "x", "o", "x"}));
}

TEST(Report, EmptyResultsGiveHeaderOnly) {
  const auto csv = report_csv({}, kFull);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.rfind("kind,train_b0,train_b100,train_b750,train_b1500,test_b0", 0), 0u);
  EXPECT_TRUE(report_json({}, kFull).at("rows").empty());
  EXPECT_TRUE(summary_json({}).empty());
}

TEST(AlteredChannels, MissingNearestAndZeroFill) {
  std::mt19937_64 rng(1);
  const auto full = fixtures::random_stack(rng, {0, 100, 750, 1500}, 6, 6);
  const auto test = subset_protocol(full, Protocol::from_values(std::vector<double>{0, 100, 1500}));
  const std::vector<double> training{0, 100, 750, 1500};
  const auto nearest = altered_channels(test, training, ScenarioKind::kMissing, MissingFill::kNearest);
  ASSERT_EQ(nearest.size(), 4u);
  EXPECT_TRUE(nearest[0] == full.plane(0));
  EXPECT_TRUE(nearest[1] == full.plane(1));
  EXPECT_TRUE(nearest[2] == full.plane(1));
  EXPECT_TRUE(nearest[3] == full.plane(3));
  const auto zero = altered_channels(test, training, ScenarioKind::kMissing, MissingFill::kZero);
  for (std::size_t i = 0; i < zero[2].size(); ++i) EXPECT_EQ(zero[2][i], 0.0f);
}

TEST(AlteredChannels, ShiftedSlotsReplacement) {
  std::mt19937_64 rng(2);
  const auto full = fixtures::random_stack(rng, {0, 100, 750, 1500}, 6, 6);
  const auto test = subset_protocol(full, Protocol::from_values(std::vector<double>{0, 100, 1500}));
  const auto planes =
      altered_channels(test, {0, 100, 750}, ScenarioKind::kShifted, MissingFill::kNearest);
  ASSERT_EQ(planes.size(), 3u);
  EXPECT_TRUE(planes[2] == full.plane(3));
}

TEST(RunScenario, MatchedKindMbdaEqualsMatched) {
  const auto cases = small_dataset(12, 3);
  const auto split = split_for(cases, 1);
  const ScenarioSpec spec{{0, 100, 750, 1500}, {0, 100, 750, 1500}, ScenarioKind::kMatched};
  const auto r = run_scenario(spec, cases, split, FitConfig{}, quick_training(),
                              quick_config({Mode::kMatched, Mode::kMbda}));
  ASSERT_NE(r.find(Mode::kMatched), nullptr);
  ASSERT_NE(r.find(Mode::kMbda), nullptr);
  EXPECT_EQ(r.find(Mode::kMatched)->scores, r.find(Mode::kMbda)->scores);
}

TEST(RunScenario, NoiseFreeMatchedSeparates) {
  const auto cases = small_dataset(20, 4);
  const auto split = split_for(cases, 2);
  const ScenarioSpec spec{{0, 100, 750, 1500}, {0, 100, 1500}, ScenarioKind::kMissing};
  NetworkCache cache;
  auto training = quick_training();
  training.max_epochs = 60;
  training.learning_rate = 1e-2;
  const auto r = run_scenario(spec, cases, split, FitConfig{}, training,
                              quick_config(all_modes()), &cache);
  const auto* matched = r.find(Mode::kMatched);
  ASSERT_NE(matched, nullptr);
  EXPECT_GE(matched->auc, 0.95);
  EXPECT_EQ(matched->fold_aucs.size(), 5u);
  EXPECT_EQ(r.case_ids.size(), cases.size());
  EXPECT_EQ(r.modes.size(), all_modes().size());
  EXPECT_EQ(r.tests.size(), 2u);
  EXPECT_GT(cache.size(), 0u);

  const auto again = run_scenario(spec, cases, split, FitConfig{}, training,
                                  quick_config(all_modes()), &cache);
  EXPECT_EQ(to_json(again), to_json(r));
}

TEST(RunScenario, UnsortedDatasetRejected) {
  auto cases = small_dataset(6, 5);
  std::swap(cases[0], cases[1]);
  const ScenarioSpec spec{{0, 100, 750}, {0, 100}, ScenarioKind::kMissing};
  EXPECT_THROW(run_scenario(spec, cases, split_for(cases, 1), FitConfig{}, quick_training(),
                            quick_config({Mode::kMatched})),
               Error);
}

TEST(ScenarioJson, RoundTripAndEmit) {
  const auto cases = small_dataset(8, 6);
  const auto split = split_for(cases, 1);
  auto config = quick_config({Mode::kMatched, Mode::kAlteredE2E, Mode::kMbda});
  auto training = quick_training();
  training.max_epochs = 3;
  const std::vector<ScenarioSpec> specs{
      {{0, 100, 750, 1500}, {0, 100, 1500}, ScenarioKind::kMissing},
      {{0, 100, 750}, {0, 100, 1500}, ScenarioKind::kShifted}};
  const auto results = run_scenarios(specs, cases, split, FitConfig{}, training, config);
  ASSERT_EQ(results.size(), 2u);
  for (const auto& r : results) {
    const auto back = result_from_json(to_json(r));
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_EQ(back.spec, r.spec);
    EXPECT_EQ(spec_from_json(to_json(r.spec)), r.spec);
  }
  fixtures::TempDir dir;
  emit_report(results, kFull, dir.path());
  for (const char* f : {"report.csv", "report.json", "summary.json", "results.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto csv = slurp(dir / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\nmissing,x,x,x,x,x,x,o,x,"), std::string::npos);
  EXPECT_NE(csv.find("\nshifted,x,x,x,,x,x,o,x,"), std::string::npos);
  const auto summary = read_json_file(dir / "summary.json");
  EXPECT_EQ(summary.at("missing").at("rows"), 1);
}

TEST(Holm, AppliedAcrossMatrix) {
  ScenarioResult a, b;
  a.tests.push_back({Mode::kMbda, Mode::kAlteredE2E, DelongComparison{}, false});
  a.tests.back().comparison.p_two_sided = 0.03;
  b.tests.push_back({Mode::kMbda, Mode::kAlteredE2E, DelongComparison{}, false});
  b.tests.back().comparison.p_two_sided = 0.04;
  std::vector<ScenarioResult> results{a, b};
  apply_holm(results, 0.05);
  // Each row alone would pass; across the matrix 0.03 > 0.05 / 2 stops the procedure.
  EXPECT_FALSE(results[0].tests[0].significant);
  EXPECT_FALSE(results[1].tests[0].significant);
  results[0].tests[0].comparison.p_two_sided = 0.01;
  apply_holm(results, 0.05);
  EXPECT_TRUE(results[0].tests[0].significant);
  EXPECT_TRUE(results[1].tests[0].significant);
}
