#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ugraph/config.hpp"
#include "ugraph/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace ugraph;

namespace {

const char* kTinyConfig = R"({
  "dataset": {"grasps": 4, "orientations_per_grasp": 5},
  "bnn": {"hidden": [4], "samples": 5, "warmup": 5, "epochs": 2, "max_tree_depth": 3},
  "activenet": {"hidden": [4], "epochs": 2},
  "eval": {"scenes": 2, "episodes": 1},
  "ood": {"offsets": 1, "episodes": 1}
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ugraph_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("tiny.json", kTinyConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }
  std::string read(const std::string& name) const { return read_file(dir_ / name); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  /// Runs the CLI in the test directory; stdout and stderr go to out.txt and err.txt.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" UGRAPH_CLI_PATH "' " + args + " >out.txt 2>err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PrintDefaultParsesBackToDefaults) {
  ASSERT_EQ(run("config print-default"), 0);
  EXPECT_EQ(to_json(parse_config(read("out.txt"))).dump(), to_json(RunConfig{}).dump());
  ASSERT_EQ(run("config print-default --full-scale"), 0);
  EXPECT_EQ(to_json(parse_config(read("out.txt"))).dump(), to_json(RunConfig::full_scale()).dump());
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, ConfigErrorsExitTwoAndNameTheField) {
  write("bad.json", R"({"dataset": {"mass_min": 0.9}})");
  EXPECT_EQ(run("--config bad.json simulate"), 2);
  EXPECT_NE(read("err.txt").find("mass_min"), std::string::npos);
  write("typo.json", R"({"bnn": {"sampels": 3}})");
  EXPECT_EQ(run("--config typo.json simulate"), 2);
  EXPECT_NE(read("err.txt").find("bnn.sampels"), std::string::npos);
  EXPECT_EQ(run("simulate --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, MissingInputsExitThree) {
  EXPECT_EQ(run("--config missing.json simulate"), 3);
  EXPECT_EQ(run("--config tiny.json train-bnn --dataset missing.jsonl"), 3);
  EXPECT_EQ(run("--config tiny.json eval --bnn missing.json --activenet missing.json"), 3);
}

TEST_F(Cli, DivergentTrainingExitsFour) {
  ASSERT_EQ(run("--config tiny.json --out o simulate"), 0);
  const auto loaded = read_dataset(path("o/dataset.jsonl"));
  auto records = loaded.records;
  for (auto& r : records) r.wrench.force = Vec3(1e308, 0, -1e308);
  write_dataset(path("huge.jsonl"), nlohmann::ordered_json(loaded.header), records);
  EXPECT_EQ(run("--config tiny.json --out o train-bnn --dataset huge.jsonl"), 4);
  EXPECT_NE(read("err.txt").find("numerical"), std::string::npos);
}

TEST_F(Cli, SimulateIsByteIdenticalAndSeedOverrides) {
  ASSERT_EQ(run("--config tiny.json --out a simulate"), 0);
  ASSERT_EQ(run("--config tiny.json --out b simulate"), 0);
  EXPECT_EQ(read("a/dataset.jsonl"), read("b/dataset.jsonl"));
  ASSERT_EQ(run("--config tiny.json --seed 8 --out c simulate"), 0);
  EXPECT_NE(read("a/dataset.jsonl"), read("c/dataset.jsonl"));
  const auto header = read_dataset(path("c/dataset.jsonl")).header;
  EXPECT_EQ(header.at("seed").get<std::uint64_t>(), 8u);
  EXPECT_EQ(header.at("config").at("seed").get<std::uint64_t>(), 8u);
}

TEST_F(Cli, EndToEndProducesAllArtifacts) {
  for (const char* cmd : {"simulate", "train-bnn", "train-active", "eval", "ood-study"})
    ASSERT_EQ(run(std::string("--config tiny.json --out run ") + cmd), 0) << cmd << ": " << read("err.txt");
  for (const char* f : {"dataset.jsonl", "bnn_model.json", "activenet_model.json", "eval_episodes.csv",
                        "eval_summary.txt", "ood_episodes.csv", "ood_summary.txt"})
    EXPECT_TRUE(fs::exists(path("run") / f)) << f;
  // timestamps only in the summary footers
  EXPECT_EQ(read("run/eval_episodes.csv").find("generated"), std::string::npos);
  const std::string summary = read("run/eval_summary.txt");
  const auto stamp = summary.rfind("generated ");
  ASSERT_NE(stamp, std::string::npos);
  EXPECT_EQ(summary.find('\n', stamp), summary.size() - 1);
  EXPECT_NE(summary.find("U-GRAPH"), std::string::npos);
  EXPECT_NE(read("run/ood_summary.txt").find("Mass (g)"), std::string::npos);
}

TEST_F(Cli, EvalWithoutActiveNetRunsBaselinesOnly) {
  write("base.json", R"({"eval": {"scenes": 2, "episodes": 1, "methods": ["Analytical Solution"]}})");
  ASSERT_EQ(run("--config base.json --out r eval"), 0) << read("err.txt");
  EXPECT_NE(read("r/eval_summary.txt").find("Analytical Solution"), std::string::npos);
}
