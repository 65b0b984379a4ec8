// Copyright 2026 The relerm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "relerm/config.hpp"
#include "relerm/model.hpp"

namespace relerm {
namespace {

namespace fs = std::filesystem;

const fs::path kRoot = fs::path(RELERM_FIXTURES).parent_path().parent_path();

struct Invocation {
  int status = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("relerm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs from the repository root so the fixture configs' relative paths resolve.
  Invocation run(const std::string& args) {
    const auto out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = "cd '" + kRoot.string() + "' && '" + RELERM_CLI + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    Invocation r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir_;
};

TEST_F(Cli, RiskcheckPasses) {
  auto r = run("riskcheck -c data/fixtures/riskcheck.conf --riskcheck.samples 200000 --output.dir " +
               (dir_ / "rc").string());
  ASSERT_EQ(r.status, 0) << r.err;
  auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary["pass"], true);
  std::ifstream in(dir_ / "rc" / "riskcheck.jsonl");
  std::string line;
  std::getline(in, line);
  auto h = nlohmann::json::parse(line);
  EXPECT_EQ(h["command"], "riskcheck");
  EXPECT_EQ(h["seed"], 1);
}

TEST_F(Cli, ZeroStepTrainingWritesTheInitialization) {
  auto r = run("train -c data/fixtures/train.conf --train.steps 0 --train.eval_every 0 --output.dir " +
               (dir_ / "t").string());
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream in(dir_ / "t" / "checkpoint.bin", std::ios::binary);
  auto p = read_checkpoint(in);
  auto init = ParamStore::initialized(7, 8, 2, 0, 42);
  ASSERT_EQ(p.flat().size(), init.flat().size());
  for (std::size_t i = 0; i < p.flat().size(); ++i) EXPECT_EQ(p.flat()[i], init.flat()[i]);
  EXPECT_TRUE(fs::exists(dir_ / "t" / "embeddings.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "t" / "trace.jsonl"));
}

TEST_F(Cli, SameSeedSameArtifacts) {
  for (const char* sub : {"a", "b"}) {
    auto r = run("train -c data/fixtures/train.conf --train.steps 300 --output.dir " +
                 (dir_ / sub).string());
    ASSERT_EQ(r.status, 0) << r.err;
  }
  for (const char* f : {"checkpoint.bin", "embeddings.tsv", "trace.jsonl"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  auto r = run("train -c data/fixtures/train.conf --train.steps 300 --seed 43 --output.dir " +
               (dir_ / "c").string());
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(slurp(dir_ / "a" / "checkpoint.bin"), slurp(dir_ / "c" / "checkpoint.bin"));
}

TEST_F(Cli, SimulateAndEvalAreReproducible) {
  for (const char* sub : {"a", "b"}) {
    auto r = run("simulate -c data/fixtures/simulate.conf --simulate.replicates 3 --output.dir " +
                 (dir_ / sub).string());
    ASSERT_EQ(r.status, 0) << r.err;
    r = run("eval -c data/fixtures/eval.conf --train.steps 300 --eval.seeds 2 --output.dir " +
            (dir_ / sub).string());
    ASSERT_EQ(r.status, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir_ / "a" / "records.jsonl"), slurp(dir_ / "b" / "records.jsonl"));
  EXPECT_EQ(slurp(dir_ / "a" / "results.csv"), slurp(dir_ / "b" / "results.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "results.csv").rfind("# seed=7\n", 0), 0u);
}

TEST_F(Cli, ConfigErrorListsEveryViolationAndWritesNothing) {
  std::ofstream(dir_ / "bad.conf") << "graph.path = data/fixtures/path3.txt\n"
                                      "sampler.p = 1.5\n"
                                      "nonsense = 1\n"
                                      "output.dir = "
                                   << (dir_ / "o").string() << "\n";
  auto r = run("train -c " + (dir_ / "bad.conf").string());
  EXPECT_EQ(r.status, 2);
  auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err["error"], "config_error");
  EXPECT_EQ(err["violations"].size(), 3u) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Cli, MissingFileIsAPathError) {
  auto r = run("train -c data/fixtures/train.conf --graph.path /nonexistent/g.txt --output.dir " +
               (dir_ / "o").string());
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "path_error");
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Cli, OverridesTakeEitherForm) {
  auto r = run("sample -c data/fixtures/train.conf --sample.count=4 --sampler.p 1.0 --output.dir " +
               (dir_ / "s").string());
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream in(dir_ / "s" / "samples.jsonl");
  std::string line;
  std::size_t lines = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["vertices"].size(), 7u);  // p = 1 keeps every vertex
    ++lines;
  }
  EXPECT_EQ(lines, 4u);
}

TEST(Config, ParseCollectsMalformedAndDuplicateLines) {
  std::istringstream in("seed = 1\n# comment\n\nno equals here\nseed = 2\n = 3\nmodel.dim = 4 # trailing\n");
  std::vector<std::string> v;
  auto raw = parse_config_text(in, v);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(raw.at("seed"), "1");
  EXPECT_EQ(raw.at("model.dim"), "4");
}

TEST(Config, ResolveReportsAllViolations) {
  RawConfig raw{{"model.dim", "zero"}, {"sampler.algorithm", "bogus"}, {"train.workers", "0"}};
  try {
    resolve_config(raw, "train");
    FAIL();
  } catch (const ConfigError& e) {
    // dim, algorithm, workers, missing seed, missing graph
    EXPECT_EQ(e.violations().size(), 5u);
  }
}

TEST(Config, SimulateNeedsNoGraph) {
  RawConfig raw{{"seed", "3"}, {"simulate.sizes", "10, 20.5"}, {"simulate.experiment", "stability"}};
  auto c = resolve_config(raw, "simulate");
  EXPECT_EQ(c.simulate.sizes, (std::vector<double>{10, 20.5}));
  EXPECT_EQ(c.simulate.experiment, Experiment::kStability);
  EXPECT_EQ(*c.seed, 3u);
}

TEST(Config, EveryKeyIsAccepted) {
  EXPECT_GT(config_keys().size(), 40u);
  for (const auto& k : config_keys()) EXPECT_EQ(k.find(' '), std::string::npos);
}

}  // namespace
}  // namespace relerm
