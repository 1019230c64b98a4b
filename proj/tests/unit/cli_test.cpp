// Copyright 2026 The MobileDenseNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdn/cli.hpp"
#include "mdn/model.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mdn::testing {

CliResult run_cli_binary(const std::string& args) {
  const std::string cmd = std::string(MDN_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace mdn::testing

namespace mdn {
namespace {

using testing::run_cli_binary;

const std::string kFixtures = MDN_FIXTURE_DIR;
const std::string kTinySets =
    "--set width_multiplier=0.125 --set input_size=64 --set num_classes=4 "
    "--set batch_size=2 --set multi_scale_sizes=[64] ";

json read_json(const std::string& path) {
  std::ifstream f(path);
  return json::parse(f);
}

int lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run_cli_binary("analyze --bogus 1");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(lines(r.output), 1) << r.output;
  EXPECT_NE(r.output.find("bogus"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsUsageError) {
  EXPECT_EQ(run_cli_binary("").status, 2);
  EXPECT_EQ(run_cli_binary("frobnicate").status, 2);
  EXPECT_EQ(run_cli_binary("train --dataset synth:4:64").status, 2);  // no --out
}

TEST(Cli, HelpSucceeds) {
  const auto r = run_cli_binary("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* cmd : {"train", "eval", "infer", "analyze", "anchors"})
    EXPECT_NE(r.output.find(cmd), std::string::npos) << cmd;
}

TEST(Cli, AnalyzeWritesReport) {
  testing::TempDir dir;
  const auto r = run_cli_binary("analyze --config " + std::string(MDN_CONFIG_DIR) +
                                "/mobilenetv1_ssdlite.json --out " + (dir / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json rep = read_json(dir / "out/cost_report.json");
  ModelConfig c = ModelConfig::mobilenet_v1_ssdlite();
  Detector<float> model(c);
  std::int64_t params = 0;
  for (auto* p : model.params())
    if (p->trainable) params += p->size();
  EXPECT_EQ(rep["total_params"].get<std::int64_t>(), params);
  EXPECT_EQ(rep["input_size"].get<int>(), 320);
  EXPECT_NE(r.output.find("total"), std::string::npos);
}

TEST(Cli, OverridesApply) {
  testing::TempDir dir;
  const auto a = run_cli_binary("analyze --out " + (dir / "a"));
  const auto b = run_cli_binary("analyze --set width_multiplier=0.5 --set neck_variant=ssdlite --out " +
                                (dir / "b"));
  ASSERT_EQ(a.status, 0) << a.output;
  ASSERT_EQ(b.status, 0) << b.output;
  EXPECT_GT(read_json(dir / "a/cost_report.json")["total_params"].get<std::int64_t>(),
            read_json(dir / "b/cost_report.json")["total_params"].get<std::int64_t>());
}

TEST(Cli, BadOverrideFailsWithoutOutput) {
  testing::TempDir dir;
  const auto r = run_cli_binary("analyze --set no_such_key=1 --out " + (dir / "out"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(lines(r.output), 1) << r.output;
  EXPECT_NE(r.output.find("no_such_key"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
  const auto v = run_cli_binary("analyze --set input_size=100");
  EXPECT_EQ(v.status, 1);
  EXPECT_NE(v.output.find("input_size"), std::string::npos) << v.output;
}

TEST(Cli, AnchorsReport) {
  testing::TempDir dir;
  const auto r = run_cli_binary("anchors --dataset " + kFixtures +
                                "/coco_small.json --thresholds 0.3,0.5 --out " + (dir / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json rep = read_json(dir / "out/anchors_report.json");
  EXPECT_EQ(rep["anchors"].get<int>(), 21340);
  EXPECT_EQ(rep["boxes"].get<int>(), 5);  // crowd box excluded
  ASSERT_EQ(rep["coverage_error"].size(), 2u);
  EXPECT_LE(rep["coverage_error"][0]["percent"].get<double>(),
            rep["coverage_error"][1]["percent"].get<double>());
  EXPECT_EQ(run_cli_binary("anchors --dataset " + kFixtures + "/coco_small.json --thresholds 1.5")
                .status,
            1);
}

TEST(Cli, InProcessMatchesBinaryContract) {
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"analyze", "--nope"}, out, err), 2);
  EXPECT_EQ(lines(err.str()), 1);
  std::ostringstream out2, err2;
  EXPECT_EQ(run_cli({"analyze", "--set", "width_multiplier=0.25"}, out2, err2), 0);
  EXPECT_TRUE(err2.str().empty());
}

// One tiny training run shared by the train/eval/infer tests.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "mdn_cli_pipeline";
    fs::remove_all(root_);
    fs::create_directories(root_);
    train_ = run_cli_binary("train " + kTinySets +
                            "--set total_iterations=4 --set log_every=2 --set checkpoint_every=2 "
                            "--dataset synth:6:64:3 --seed 5 --out " +
                            (root_ / "run").string());
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }
  static std::string path(const std::string& leaf) { return (root_ / leaf).string(); }

  static inline fs::path root_;
  static inline testing::CliResult train_;
};

TEST_F(CliPipeline, TrainWritesArtifacts) {
  ASSERT_EQ(train_.status, 0) << train_.output;
  for (const char* f : {"model.mdn", "checkpoint-2.mdn", "loss_log.ndjson",
                        "config.json", "categories.json"})
    EXPECT_TRUE(fs::exists(path(std::string("run/") + f))) << f;
  const CheckpointMeta meta = read_checkpoint_meta(path("run/model.mdn"));
  EXPECT_EQ(meta.config.seed, 5u);
  EXPECT_EQ(meta.config.width_multiplier, 0.125);
  EXPECT_EQ(meta.iteration, 4);
  std::ifstream log(path("run/loss_log.ndjson"));
  int records = 0;
  for (std::string line; std::getline(log, line);) {
    const json rec = json::parse(line);
    EXPECT_TRUE(rec.contains("total"));
    ++records;
  }
  EXPECT_EQ(records, 2);
}

TEST_F(CliPipeline, EvalWritesReport) {
  ASSERT_EQ(train_.status, 0);
  const auto r = run_cli_binary("eval --checkpoint " + path("run/model.mdn") +
                                " --dataset synth:4:64:9 --thresholds 0.01,0.5 --out " +
                                path("eval"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json rep = read_json(path("eval/eval_report.json"));
  EXPECT_TRUE(rep.contains("AP50"));
  EXPECT_EQ(rep["per_class"].size(), 3u);
}

TEST_F(CliPipeline, EvalRejectsMismatchedConfig) {
  ASSERT_EQ(train_.status, 0);
  const auto r = run_cli_binary("eval --checkpoint " + path("run/model.mdn") +
                                " --set width_multiplier=0.25 --dataset synth:4:64:9 --out " +
                                path("mismatch"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("width_multiplier"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(path("mismatch")));
  // Decoding settings are free to change.
  const auto ok = run_cli_binary("eval --checkpoint " + path("run/model.mdn") +
                                 " --set score_threshold=0.2 --dataset synth:2:64:9");
  EXPECT_EQ(ok.status, 0) << ok.output;
}

TEST_F(CliPipeline, EvalRejectsForeignCategories) {
  ASSERT_EQ(train_.status, 0);
  const auto r = run_cli_binary("eval --checkpoint " + path("run/model.mdn") + " --dataset " +
                                kFixtures + "/coco_small.json --images " + kFixtures + "/images");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("categor"), std::string::npos) << r.output;
}

TEST_F(CliPipeline, InferAnnotatesImages) {
  ASSERT_EQ(train_.status, 0);
  const auto r = run_cli_binary("infer --checkpoint " + path("run/model.mdn") + " --images " +
                                kFixtures + "/images --thresholds 0.01 --out " + path("infer"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json dets = read_json(path("infer/detections.json"));
  EXPECT_EQ(dets.size(), 5u);
  for (int i = 1; i <= 5; ++i) {
    EXPECT_TRUE(dets.contains("img" + std::to_string(i) + ".png"));
    EXPECT_TRUE(fs::exists(path("infer/annotated/img" + std::to_string(i) + ".png")));
  }
}

TEST_F(CliPipeline, FailedInferRemovesPartialOutput) {
  ASSERT_EQ(train_.status, 0);
  fs::create_directories(path("mixed"));
  fs::copy_file(kFixtures + "/images/img1.png", path("mixed/a.png"));
  {
    std::ofstream f(path("mixed/b.png"), std::ios::binary);
    f << "not an image";
  }
  const auto r = run_cli_binary("infer --checkpoint " + path("run/model.mdn") + " --images " +
                                path("mixed") + " --out " + path("partial"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(lines(r.output), 2) << r.output;  // progress line for a.png, then the error
  EXPECT_FALSE(fs::exists(path("partial")));

  // A pre-existing directory keeps its old contents but loses the new ones.
  fs::create_directories(path("keep"));
  { std::ofstream(path("keep/old.txt")) << "x"; }
  run_cli_binary("infer --checkpoint " + path("run/model.mdn") + " --images " + path("mixed") +
                 " --out " + path("keep"));
  EXPECT_TRUE(fs::exists(path("keep/old.txt")));
  EXPECT_FALSE(fs::exists(path("keep/annotated")));
  EXPECT_FALSE(fs::exists(path("keep/detections.json")));
}

TEST_F(CliPipeline, MissingCheckpointFails) {
  const auto r = run_cli_binary("eval --checkpoint " + path("nope.mdn") +
                                " --dataset synth:2:64 --out " + path("nothing"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(lines(r.output), 1) << r.output;
  EXPECT_FALSE(fs::exists(path("nothing")));
}

TEST(Cli, SynthWritesLoadableDataset) {
  testing::TempDir dir;
  const auto r = run_cli_binary("synth --count 3 --size 64 --seed 2 --out " + (dir / "s"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json doc = read_json(dir / "s/annotations.json");
  EXPECT_EQ(doc["images"].size(), 3u);
  const auto a = run_cli_binary("anchors --set input_size=64 --dataset " +
                                (dir / "s/annotations.json"));
  EXPECT_EQ(a.status, 0) << a.output;
}

}  // namespace
}  // namespace mdn
