#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mbda/mbda.h"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace {

class CApi : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    mbda_set_log_level(MBDA_LOG_ERROR);
    root_ = fs::temp_directory_path() / ("mbda_capi_" + std::to_string(std::random_device{}()));
    dataset_ = (root_ / "data").string();
    char* index = nullptr;
    ASSERT_EQ(mbda_phantom_generate(kConfig, dataset_.c_str(), &index), MBDA_OK)
        << mbda_last_error();
    ASSERT_NE(index, nullptr);
    EXPECT_NE(std::string(index).find("case-0011"), std::string::npos);
    mbda_string_free(index);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string case_dir(int i) {
    char id[16];
    std::snprintf(id, sizeof id, "case-%04d", i);
    return (fs::path(dataset_) / id).string();
  }

  static constexpr const char* kConfig =
      R"({"seed": 5, "phantom": {"n_benign": 6, "n_malignant": 6, "noise_sigma": 0,
          "empty_lesion_fraction": 0},
          "train": {"max_epochs": 2},
          "scenario": {"e2e_architecture": {"input_channels": 4, "exploit_widths": [3],
                                            "feature_widths": [3]},
                       "f2e_architecture": {"input_channels": 2, "exploit_widths": [],
                                            "feature_widths": [3]}}})";

  static inline fs::path root_;
  static inline std::string dataset_;
};

struct StackPtr {
  mbda_stack* p = nullptr;
  ~StackPtr() { mbda_stack_free(p); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  mbda_string_free(s);
  return out;
}

}  // namespace

TEST(CApiBasics, StatusNamesAndVersion) {
  EXPECT_STREQ(mbda_status_name(MBDA_OK), "OK");
  EXPECT_STRNE(mbda_status_name(MBDA_ERR_PROTOCOL), mbda_status_name(MBDA_ERR_IO));
  EXPECT_GT(std::strlen(mbda_version()), 0u);
  mbda_stack_free(nullptr);
  mbda_network_free(nullptr);
  mbda_string_free(nullptr);
}

TEST(CApiBasics, ErrorsSetLastError) {
  mbda_stack* s = nullptr;
  EXPECT_EQ(mbda_stack_load("/definitely/not/here", &s), MBDA_ERR_IO);
  EXPECT_EQ(s, nullptr);
  EXPECT_GT(std::strlen(mbda_last_error()), 0u);
  EXPECT_EQ(mbda_stack_load(nullptr, &s), MBDA_ERR_INVALID_ARGUMENT);
  char* out = nullptr;
  EXPECT_EQ(mbda_config_resolve(R"({"bogus": 1})", &out), MBDA_ERR_VALIDATION);
  EXPECT_NE(std::string(mbda_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(mbda_config_resolve("{not json", &out), MBDA_ERR_VALIDATION);
  EXPECT_EQ(mbda_config_resolve(nullptr, &out), MBDA_OK);
  EXPECT_NE(take(out).find("\"phantom\""), std::string::npos);
  EXPECT_STREQ(mbda_last_error(), "");
}

TEST(CApiBasics, ModelFunctions) {
  const mbda_dki_params p{1000, 1e-3, 1.0, 0};
  EXPECT_NEAR(mbda_forward_signal(&p, 1000), 434.598209, 1e-6);
  double j[3];
  ASSERT_EQ(mbda_forward_jacobian(&p, 750, j), MBDA_OK);
  auto f = [&](double adc) { return oracle::dki_signal(p.s0, adc, p.akc, p.theta, 750); };
  EXPECT_NEAR(j[1], oracle::richardson_difference(f, p.adc, 1e-6), 1e-6 * std::abs(j[1]));

  const mbda_dki_params truth{800, 1.2e-3, 0.9, 30};
  const double b[4] = {0, 100, 750, 1500};
  double s[4];
  for (int i = 0; i < 4; ++i) s[i] = oracle::dki_signal(800, 1.2e-3, 0.9, 30, b[i]);
  mbda_fit_result r{};
  ASSERT_EQ(mbda_fit_voxel(b, s, 4, truth.theta, nullptr, &r), MBDA_OK);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.params.adc, truth.adc, 1e-6 * truth.adc);
  EXPECT_NEAR(r.params.akc, truth.akc, 1e-6 * truth.akc);
  EXPECT_EQ(mbda_fit_voxel(b, s, 2, 30, nullptr, &r), MBDA_ERR_UNDER_DETERMINED);
  EXPECT_EQ(mbda_fit_voxel(b, s, 2, 30, R"({"constrain_akc_zero": true})", &r), MBDA_OK);
  EXPECT_GT(mbda_threshold_classify(1.0e-3, 1.4e-3, 0.2e-3), 0.5);
}

TEST(CApiBasics, Statistics) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12;
    std::vector<double> a(n), bb(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = level(rng);
      bb[i] = level(rng);
      labels[i] = static_cast<int>(i % 2);
    }
    const auto ref = oracle::delong(a, bb, labels);
    double auc = 0.0, var = 0.0;
    ASSERT_EQ(mbda_auc(a.data(), labels.data(), n, &auc), MBDA_OK);
    EXPECT_NEAR(auc, ref.auc_a, 1e-12);
    ASSERT_EQ(mbda_delong_variance(a.data(), labels.data(), n, &var), MBDA_OK);
    EXPECT_NEAR(var, ref.var_a, 1e-12);
    mbda_delong d{};
    ASSERT_EQ(mbda_delong_test(a.data(), bb.data(), labels.data(), n, &d), MBDA_OK);
    EXPECT_NEAR(d.p_two_sided, ref.p, 1e-10);
  }
  const int single[2] = {1, 1};
  const double sc[2] = {0.1, 0.2};
  double auc = 0.0;
  EXPECT_EQ(mbda_auc(sc, single, 2, &auc), MBDA_ERR_SINGLE_CLASS);
  const double p[3] = {0.01, 0.04, 0.03};
  int reject[3];
  ASSERT_EQ(mbda_holm_bonferroni(p, 3, 0.05, reject), MBDA_OK);
  EXPECT_EQ(reject[0], 1);
  EXPECT_EQ(reject[1], 0);
  EXPECT_EQ(reject[2], 0);
  const double bad[1] = {2.0};
  EXPECT_EQ(mbda_holm_bonferroni(bad, 1, 0.05, reject), MBDA_ERR_INVALID_P);
}

TEST(CApiBasics, ScenarioEnumerate) {
  const double full[4] = {0, 100, 750, 1500};
  char* json = nullptr;
  ASSERT_EQ(mbda_scenario_enumerate(full, 4, "shifted", &json), MBDA_OK);
  const auto text = take(json);
  std::size_t rows = 0;
  for (std::size_t pos = 0; (pos = text.find("\"kind\"", pos)) != std::string::npos; ++pos) ++rows;
  EXPECT_EQ(rows, 12u);
  EXPECT_EQ(mbda_scenario_enumerate(full, 4, "sideways", &json), MBDA_ERR_VALIDATION);
}

TEST_F(CApi, StackAccessors) {
  StackPtr s;
  ASSERT_EQ(mbda_stack_load(case_dir(0).c_str(), &s.p), MBDA_OK) << mbda_last_error();
  size_t w = 0, h = 0, n = 0;
  ASSERT_EQ(mbda_stack_shape(s.p, &w, &h, &n), MBDA_OK);
  EXPECT_EQ(w, 32u);
  EXPECT_EQ(h, 32u);
  EXPECT_EQ(n, 4u);
  double b[4];
  EXPECT_EQ(mbda_stack_bvalues(s.p, b, 2), MBDA_ERR_BUFFER_TOO_SMALL);
  ASSERT_EQ(mbda_stack_bvalues(s.p, b, 4), MBDA_OK);
  EXPECT_EQ(b[3], 1500.0);
  double theta = 0;
  ASSERT_EQ(mbda_stack_theta(s.p, &theta), MBDA_OK);
  EXPECT_GT(theta, 0.0);
  std::vector<float> plane(w * h);
  EXPECT_EQ(mbda_stack_plane(s.p, 4, plane.data(), plane.size()), MBDA_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(mbda_stack_plane(s.p, 0, plane.data(), plane.size()), MBDA_OK);
  EXPECT_FLOAT_EQ(plane[0], static_cast<float>(theta));
  std::vector<uint8_t> mask(w * h);
  ASSERT_EQ(mbda_stack_lesion_mask(s.p, mask.data(), mask.size()), MBDA_OK);
  EXPECT_GT(std::count(mask.begin(), mask.end(), 1), 0);
  char* meta = nullptr;
  ASSERT_EQ(mbda_stack_meta(s.p, &meta), MBDA_OK);
  EXPECT_NE(take(meta).find("case-0000"), std::string::npos);

  StackPtr sub;
  const double keep[2] = {0, 750};
  ASSERT_EQ(mbda_stack_subset(s.p, keep, 2, &sub.p), MBDA_OK);
  std::vector<float> sub_plane(w * h);
  ASSERT_EQ(mbda_stack_plane(sub.p, 1, sub_plane.data(), sub_plane.size()), MBDA_OK);
  ASSERT_EQ(mbda_stack_plane(s.p, 2, plane.data(), plane.size()), MBDA_OK);
  EXPECT_EQ(sub_plane, plane);
  const double missing[2] = {0, 500};
  StackPtr none;
  EXPECT_EQ(mbda_stack_subset(s.p, missing, 2, &none.p), MBDA_ERR_MISSING_BVALUE);

  const auto out = (root_ / "saved").string();
  ASSERT_EQ(mbda_stack_save(sub.p, out.c_str(), R"({"id": "sub", "label": "malignant"})"),
            MBDA_OK);
  StackPtr back;
  ASSERT_EQ(mbda_stack_load(out.c_str(), &back.p), MBDA_OK);
  ASSERT_EQ(mbda_stack_plane(back.p, 1, plane.data(), plane.size()), MBDA_OK);
  EXPECT_EQ(plane, sub_plane);
}

TEST_F(CApi, AdaptationRoundTrip) {
  StackPtr full, partial, adapted;
  ASSERT_EQ(mbda_stack_load(case_dir(7).c_str(), &full.p), MBDA_OK);
  const double inference[3] = {0, 100, 1500};
  ASSERT_EQ(mbda_stack_subset(full.p, inference, 3, &partial.p), MBDA_OK);
  const double training[4] = {0, 100, 750, 1500};
  char* report = nullptr;
  ASSERT_EQ(mbda_adapt_stack(partial.p, training, 4, nullptr, &adapted.p, &report), MBDA_OK)
      << mbda_last_error();
  EXPECT_NE(take(report).find("750"), std::string::npos);

  const std::size_t n = 32 * 32;
  std::vector<float> want(n), got(n), restored(n);
  std::vector<uint8_t> mask(n);
  ASSERT_EQ(mbda_stack_plane(full.p, 2, want.data(), n), MBDA_OK);
  ASSERT_EQ(mbda_stack_plane(adapted.p, 2, got.data(), n), MBDA_OK);
  ASSERT_EQ(mbda_stack_lesion_mask(full.p, mask.data(), n), MBDA_OK);
  ASSERT_EQ(mbda_restore_channel(partial.p, 750, nullptr, restored.data(), n), MBDA_OK);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    EXPECT_NEAR(got[i], want[i], 1e-5 * want[i]);
    EXPECT_EQ(got[i], restored[i]);
  }
  EXPECT_EQ(mbda_restore_channel(partial.p, 750, nullptr, restored.data(), 10),
            MBDA_ERR_BUFFER_TOO_SMALL);

  double adc = 0, akc = 0;
  const auto maps = (root_ / "maps").string();
  ASSERT_EQ(mbda_fit_roi(full.p, nullptr, maps.c_str(), &adc, &akc), MBDA_OK);
  EXPECT_GT(adc, 0.0);
  EXPECT_TRUE(fs::exists(maps));
}

TEST_F(CApi, TrainPredictAndScenario) {
  mbda_network* net = nullptr;
  ASSERT_EQ(mbda_network_train(dataset_.c_str(), kConfig,
                               R"({"architecture": "e2e", "protocol": [0, 100, 750, 1500]})",
                               &net),
            MBDA_OK)
      << mbda_last_error();
  char* info = nullptr;
  ASSERT_EQ(mbda_network_info(net, &info), MBDA_OK);
  EXPECT_NE(take(info).find("1500"), std::string::npos);
  const auto file = (root_ / "net.bin").string();
  ASSERT_EQ(mbda_network_save(net, file.c_str()), MBDA_OK);
  mbda_network_free(net);
  ASSERT_EQ(mbda_network_load(file.c_str(), &net), MBDA_OK);

  char* csv = nullptr;
  ASSERT_EQ(mbda_network_predict_dataset(net, dataset_.c_str(), kConfig,
                                         R"({"mode": "mbda", "inference": [0, 100, 1500]})", &csv),
            MBDA_OK)
      << mbda_last_error();
  const auto text = take(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
  EXPECT_EQ(text.rfind("id,label,score\n", 0), 0u);
  EXPECT_EQ(mbda_network_predict_dataset(net, dataset_.c_str(), kConfig, R"({"mood": 1})", &csv),
            MBDA_ERR_VALIDATION);
  mbda_network_free(net);

  const auto out = (root_ / "scenario").string();
  ASSERT_EQ(mbda_scenario_run(dataset_.c_str(), kConfig,
                              R"({"kind": "missing", "training": [0, 100, 750, 1500],
                                  "inference": [0, 100, 1500]})",
                              out.c_str()),
            MBDA_OK)
      << mbda_last_error();
  for (const char* f : {"report.csv", "report.json", "summary.json", "results.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  const auto again = (root_ / "again").string();
  ASSERT_EQ(mbda_report_emit((fs::path(out) / "results.json").c_str(), again.c_str()), MBDA_OK);
  EXPECT_EQ(fs::file_size(fs::path(again) / "report.csv"), fs::file_size(fs::path(out) / "report.csv"));
}
