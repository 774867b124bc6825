/* Copyright 2026 The DIDAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "didan/binary_io.h"
#include "json.hpp"
#include "toy.h"

namespace didan::cli {
namespace {

using didan::testing::TempDir;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    write(dir_.path() / "synth.json", R"({"n_articles": 40, "seed": 3})");
    write(dir_.path() / "train.json",
          R"({"epochs": 2, "d_vse": 4, "hidden1": 8, "hidden2": 4, "batch_size": 8})");
    const Outcome s = run({"synth", "--config", p("synth.json"), "--out", p("data")});
    ASSERT_EQ(s.code, kOk) << s.err;
  }
  std::string p(const std::string& rel) const { return (dir_.path() / rel).string(); }

  TempDir dir_;
};

TEST_F(CliPipeline, SynthTrainEvalScore) {
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "data" / "resolved_config.json"));
  const Outcome t = run({"train", "--manifest", p("data/train.jsonl"), "--val", p("data/val.jsonl"),
                         "--config", p("train.json"), "--out", p("model")});
  ASSERT_EQ(t.code, kOk) << t.err;
  const auto lines = json_lines(t.out);
  ASSERT_EQ(lines.size(), 5u);  // train + val per epoch, then the summary
  EXPECT_EQ(lines[0]["split"], "train");
  EXPECT_TRUE(lines.back().contains("best_epoch"));
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "model" / "metrics.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "model" / "resolved_config.json"));

  const Outcome e = run({"eval", "--model", p("model/best.ddn"), "--manifest", p("data/test.jsonl"),
                         "--out", p("report.json")});
  ASSERT_EQ(e.code, kOk) << e.err;
  const auto report = nlohmann::json::parse(e.out);
  EXPECT_EQ(report["n"], 6);
  EXPECT_GE(report["accuracy"].get<double>(), 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "report.json.config.json"));

  const Outcome sc =
      run({"score", "--model", p("model/model.ddn"), "--manifest", p("data/test.jsonl")});
  ASSERT_EQ(sc.code, kOk) << sc.err;
  const auto scored = json_lines(sc.out);
  ASSERT_EQ(scored.size(), 6u);
  for (const auto& line : scored) {
    const double pa = line["p_A"].get<double>();
    EXPECT_GE(pa, 0.0);
    EXPECT_LE(pa, 1.0);
    ASSERT_FALSE(line["pairs"].empty());
    EXPECT_TRUE(line["pairs"][0].contains("b_c"));
  }
}

TEST_F(CliPipeline, CcaFitAndEval) {
  const Outcome f = run({"cca", "fit", "--manifest", p("data/train.jsonl"), "--val",
                         p("data/val.jsonl"), "--out", p("cca.ddn"), "--components", "4"});
  ASSERT_EQ(f.code, kOk) << f.err;
  const Outcome e =
      run({"cca", "eval", "--model", p("cca.ddn"), "--manifest", p("data/test.jsonl")});
  ASSERT_EQ(e.code, kOk) << e.err;
  EXPECT_EQ(nlohmann::json::parse(e.out)["n"], 6);
  const Outcome generic =
      run({"eval", "--model", p("cca.ddn"), "--manifest", p("data/test.jsonl")});
  EXPECT_EQ(generic.out, e.out);
}

TEST_F(CliPipeline, UnknownConfigKeyIsUsageError) {
  write(dir_.path() / "bad.json", R"({"epochs": 1, "momentum": 0.9})");
  const Outcome t = run(
      {"train", "--manifest", p("data/train.jsonl"), "--config", p("bad.json"), "--out", p("m")});
  EXPECT_EQ(t.code, kUsage);
  EXPECT_NE(t.err.find("momentum"), std::string::npos);
}

TEST_F(CliPipeline, BadThreadCountIsUsageError) {
  write(
      dir_.path() / "matrix.json",
      R"({"synth": {"n_articles": 20}, "base": {"epochs": 1, "d_vse": 4}, "cells": [{"name": "a"}]})");
  ::setenv("DIDAN_THREADS", "zero", 1);
  const Outcome a = run({"ablate", "--matrix", p("matrix.json"), "--out", p("r.json")});
  ::unsetenv("DIDAN_THREADS");
  EXPECT_EQ(a.code, kUsage);
  EXPECT_NE(a.err.find("DIDAN_THREADS"), std::string::npos);
}

TEST(Cli, MissingManifestIsDataError) {
  TempDir dir;
  const Outcome t = run(
      {"train", "--manifest", "/nonexistent/train.jsonl", "--out", (dir.path() / "m").string()});
  EXPECT_EQ(t.code, kData);
  EXPECT_NE(t.err.find("/nonexistent/train.jsonl"), std::string::npos);
}

TEST(Cli, CorruptCheckpointIsDataError) {
  TempDir dir;
  write_file_bytes(dir.path() / "x.ddn", "not a checkpoint");
  const Outcome e = run({"eval", "--model", (dir.path() / "x.ddn").string(), "--manifest", "m"});
  EXPECT_EQ(e.code, kData);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"train", "--out", "x"}).code, kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run({"cca"}).code, kUsage);
  const Outcome help = run({"--help"});
  EXPECT_EQ(help.code, kOk);
  EXPECT_NE(help.out.find("ablate"), std::string::npos);
}

}  // namespace
}  // namespace didan::cli
