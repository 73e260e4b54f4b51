#include <gtest/gtest.h>

#include <bit>
#include <fstream>
#include <random>

#include "core/dwi.hpp"
#include "core/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mbda;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mbda::Error";
  return ErrorCode::kInvalidArgument;
}

DwiStack tiny_stack(std::vector<float> b0, std::vector<std::uint8_t> fat) {
  const std::size_t w = b0.size();
  std::vector<ImagePlane> planes{ImagePlane(w, 1, b0), ImagePlane(w, 1, b0)};
  return DwiStack(Protocol::from_values(std::vector<double>{0, 100}), planes, Mask(w, 1),
                  Mask(w, 1, fat), ThetaPolicy::kStrict);
}

}  // namespace

TEST(Protocol, Invariants) {
  EXPECT_NO_THROW(Protocol::from_values(std::vector<double>{0, 100, 750, 1500}));
  EXPECT_EQ(code_of([] { Protocol::from_values(std::vector<double>{100, 0}); }),
            ErrorCode::kProtocolError);
  EXPECT_EQ(code_of([] { Protocol::from_values(std::vector<double>{0, 100, 100}); }),
            ErrorCode::kProtocolError);
  EXPECT_EQ(code_of([] { Protocol::from_values(std::vector<double>{0}); }),
            ErrorCode::kProtocolError);
  EXPECT_EQ(code_of([] { Protocol::from_values(std::vector<double>{50, 100}); }),
            ErrorCode::kProtocolError);
  EXPECT_THROW(BValue(-1.0), Error);
}

TEST(Protocol, ParseList) {
  EXPECT_EQ(parse_bvalue_list("0,100,750"), (std::vector<double>{0, 100, 750}));
  EXPECT_THROW(parse_bvalue_list("0,abc"), Error);
}

TEST(ComputeTheta, ConstantField) {
  auto s = tiny_stack({50, 50, 50, 50}, {1, 0, 1, 1});
  EXPECT_DOUBLE_EQ(s.theta(), 50.0);
}

TEST(ComputeTheta, TwoPointMean) {
  auto s = tiny_stack({40, 7, 60}, {1, 0, 1});
  EXPECT_DOUBLE_EQ(s.theta(), 50.0);
}

TEST(ComputeTheta, RandomMaskMatchesLoopOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = fixtures::random_stack(rng, {0, 500}, 8, 8);
    std::vector<float> b0(s.plane(0).data().begin(), s.plane(0).data().end());
    std::vector<std::uint8_t> fat(s.fat_mask().data().begin(), s.fat_mask().data().end());
    const double want = oracle::masked_mean(b0, fat, 8, 8);
    EXPECT_NEAR(s.theta(), want, 1e-12 * want);
    EXPECT_DOUBLE_EQ(compute_theta(s), s.theta());
  }
}

TEST(ComputeTheta, EmptyFatMask) {
  EXPECT_EQ(code_of([] { tiny_stack({1, 2}, {0, 0}); }), ErrorCode::kEmptyFatMask);
  ImagePlane b0(2, 1, {1, 2});
  EXPECT_EQ(code_of([&] { compute_theta(b0, Mask(2, 1)); }), ErrorCode::kEmptyFatMask);
  // Lenient policy falls back to zero.
  std::vector<ImagePlane> planes{b0, b0};
  DwiStack s(Protocol::from_values(std::vector<double>{0, 100}), planes, Mask(2, 1), Mask(2, 1),
             ThetaPolicy::kZeroFallback);
  EXPECT_EQ(s.theta(), 0.0);
}

TEST(ImagePlaneTest, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(ImagePlane(2, 1, {1.0f, -1.0f}).validate(), Error);
  EXPECT_THROW(ImagePlane(2, 1, {1.0f, std::nanf("")}).validate(), Error);
  EXPECT_EQ(code_of([] { ImagePlane(2, 2, {1.0f}); }), ErrorCode::kDimensionMismatch);
}

TEST(StackIo, RoundTripTwoBValues) {
  fixtures::TempDir dir;
  auto s = fixtures::model_stack({0, 1000}, DkiParams{800, 1e-3, 0.5, 30});
  save_stack(s, dir.path());
  auto back = load_stack(dir.path());
  EXPECT_EQ(back.planes().size(), 2u);
  EXPECT_TRUE(back == s);
}

TEST(StackIo, RandomStacksRoundTripBitExactly) {
  std::mt19937_64 rng(5);
  fixtures::TempDir dir;
  for (int trial = 0; trial < 10; ++trial) {
    auto s = fixtures::random_stack(rng, {0, 100, 750, 1500}, 5 + trial, 3 + trial);
    const auto sub = dir / ("s" + std::to_string(trial));
    save_stack(s, sub, StackMeta{"id" + std::to_string(trial), Label::kMalignant, {}});
    StackMeta meta;
    auto back = load_stack(sub, meta);
    ASSERT_TRUE(back == s);
    for (std::size_t k = 0; k < s.planes().size(); ++k) {
      for (std::size_t i = 0; i < s.plane(k).size(); ++i) {
        ASSERT_EQ(std::bit_cast<std::uint32_t>(back.plane(k)[i]),
                  std::bit_cast<std::uint32_t>(s.plane(k)[i]));
      }
    }
    EXPECT_EQ(meta.id, "id" + std::to_string(trial));
    EXPECT_EQ(meta.label, Label::kMalignant);
  }
}

TEST(StackIo, EmptyLesionMaskPreserved) {
  fixtures::TempDir dir;
  auto s = fixtures::model_stack({0, 100}, DkiParams{800, 1e-3, 0.5, 30});
  DwiStack empty(s.protocol(), s.planes(), Mask(s.width(), s.height()), s.fat_mask());
  save_stack(empty, dir.path());
  EXPECT_TRUE(load_stack(dir.path()).lesion_mask().empty());
}

TEST(StackIo, ManifestListsPlanesInProtocolOrder) {
  fixtures::TempDir dir;
  std::mt19937_64 rng(1);
  auto s = fixtures::random_stack(rng, {0, 100, 750, 1500}, 64, 64);
  const auto manifest = save_stack(s, dir.path());
  const auto j = read_json_file(manifest);
  ASSERT_EQ(j.at("planes").size(), 4u);
  const std::vector<double> expected{0, 100, 750, 1500};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(j["planes"][i]["b"].get<double>(), expected[i]);
    EXPECT_TRUE(std::filesystem::exists(dir / j["planes"][i]["file"].get<std::string>()));
    EXPECT_EQ(std::filesystem::file_size(dir / j["planes"][i]["file"].get<std::string>()),
              64u * 64u * 4u);
  }
}

TEST(StackIo, ReversedProtocolIsProtocolError) {
  fixtures::TempDir dir;
  auto s = fixtures::model_stack({0, 100}, DkiParams{800, 1e-3, 0.5, 30});
  const auto manifest = save_stack(s, dir.path());
  auto j = read_json_file(manifest);
  j["protocol"] = {100, 0};
  j["planes"][0]["b"] = 100;
  j["planes"][1]["b"] = 0;
  write_text_file(manifest, j.dump());
  EXPECT_EQ(code_of([&] { load_stack(dir.path()); }), ErrorCode::kProtocolError);
}

TEST(StackIo, TruncatedPlaneIsFormatError) {
  fixtures::TempDir dir;
  auto s = fixtures::model_stack({0, 100}, DkiParams{800, 1e-3, 0.5, 30});
  save_stack(s, dir.path());
  const auto plane = dir / "plane_1.f32";
  std::filesystem::resize_file(plane, std::filesystem::file_size(plane) - 1);
  EXPECT_EQ(code_of([&] { load_stack(dir.path()); }), ErrorCode::kFormatError);
}

TEST(StackIo, NotAManifest) {
  fixtures::TempDir dir;
  write_text_file(dir / "manifest.json", "{\"format\": \"other\"}");
  EXPECT_EQ(code_of([&] { load_stack(dir.path()); }), ErrorCode::kFormatError);
  EXPECT_EQ(code_of([&] { load_stack(dir / "nowhere"); }), ErrorCode::kIoError);
}

TEST(SubsetProtocol, KeepsPlanesExactly) {
  std::mt19937_64 rng(3);
  auto s = fixtures::random_stack(rng, {0, 100, 750, 1500}, 6, 6);
  const std::vector<BValue> keep{BValue(0), BValue(100), BValue(750)};
  auto sub = subset_protocol(s, keep);
  ASSERT_EQ(sub.planes().size(), 3u);
  EXPECT_EQ(sub.protocol().values(), (std::vector<double>{0, 100, 750}));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(sub.plane(k) == s.plane(k));
  EXPECT_EQ(sub.theta(), s.theta());
  EXPECT_EQ(s.planes().size(), 4u);
}

TEST(SubsetProtocol, FullProtocolIsIdentity) {
  std::mt19937_64 rng(4);
  auto s = fixtures::random_stack(rng, {0, 100, 750, 1500}, 6, 6);
  EXPECT_TRUE(subset_protocol(s, s.protocol()) == s);
}

TEST(SubsetProtocol, Errors) {
  std::mt19937_64 rng(4);
  auto s = fixtures::random_stack(rng, {0, 100, 750, 1500}, 6, 6);
  EXPECT_EQ(code_of([&] {
              const std::vector<BValue> keep{BValue(100), BValue(750)};
              subset_protocol(s, keep);
            }),
            ErrorCode::kB0Required);
  EXPECT_EQ(code_of([&] {
              const std::vector<BValue> keep{BValue(0), BValue(500)};
              subset_protocol(s, keep);
            }),
            ErrorCode::kMissingBValue);
}

TEST(Dataset, SaveAndLoadSortedById) {
  fixtures::TempDir dir;
  std::mt19937_64 rng(8);
  std::vector<LabeledCase> cases;
  for (const char* id : {"c", "a", "b"}) {
    cases.push_back({id, fixtures::random_stack(rng, {0, 100}, 4, 4), Label::kBenign});
  }
  cases[1].label = Label::kMalignant;
  save_dataset(cases, dir.path(), {{"note", "x"}});
  auto loaded = load_dataset(dir.path());
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded[0].id, "a");
  EXPECT_EQ(loaded[0].label, Label::kMalignant);
  EXPECT_EQ(loaded[1].id, "b");
  EXPECT_TRUE(loaded[2].stack == cases[0].stack);
  EXPECT_EQ(read_dataset_index(dir.path()).info.at("note"), "x");
}
