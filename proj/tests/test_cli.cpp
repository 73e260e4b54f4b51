#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mbda_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(MBDA_CLI_PATH) + " -q " + args + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const fs::path& p, const std::string& text) const { std::ofstream(p) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run("fit"), 1);
  EXPECT_EQ(run("fit --in " + (dir_ / "missing").string() + " --out " + (dir_ / "o").string()), 2);
  write(dir_ / "bad.json", R"({"unknown_key": 1})");
  EXPECT_EQ(run("phantom generate --config " + (dir_ / "bad.json").string() + " --out " +
                (dir_ / "d").string()),
            1);
}

TEST_F(Cli, RestoreAndRerunFromRunJson) {
  write(dir_ / "cfg.json",
        R"({"phantom": {"n_benign": 2, "n_malignant": 2, "empty_lesion_fraction": 0,
                        "protocol": [0, 100, 1500]}})");
  const auto data = dir_ / "data";
  ASSERT_EQ(run("--seed 9 phantom generate --config " + (dir_ / "cfg.json").string() + " --out " +
                data.string()),
            0)
      << read(dir_ / "stderr.txt");
  ASSERT_TRUE(fs::exists(data / "run.json"));
  const auto run_json = nlohmann::json::parse(read(data / "run.json"));
  EXPECT_EQ(run_json.at("config").at("phantom").at("seed"), 9);

  const auto restored = dir_ / "restored";
  ASSERT_EQ(run("restore --in " + (data / "case-0002").string() +
                " --target-protocol 0,100,750,1500 --out " + restored.string()),
            0)
      << read(dir_ / "stderr.txt");
  const auto manifest = nlohmann::json::parse(read(restored / "manifest.json"));
  EXPECT_EQ(manifest.at("protocol").size(), 4u);
  const auto report = manifest.dump();
  EXPECT_NE(report.find("\"adaptation\""), std::string::npos);
  EXPECT_NE(report.find("\"derived\":[750"), std::string::npos);
  EXPECT_TRUE(fs::exists(restored / "run.json"));
  const auto printed = nlohmann::json::parse(read(dir_ / "stdout.txt"));
  EXPECT_EQ(printed.at("derived"), nlohmann::json::array({750.0}));

  const auto again = dir_ / "again";
  ASSERT_EQ(run("phantom generate --config " + (data / "run.json").string() + " --out " +
                again.string()),
            0)
      << read(dir_ / "stderr.txt");
  for (const auto& entry : fs::recursive_directory_iterator(data)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), data);
    if (rel == "run.json") continue;
    EXPECT_EQ(read(entry.path()), read(again / rel)) << rel;
  }
}
