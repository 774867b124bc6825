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

#include "didan/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "didan/binary_io.h"
#include "didan/synth.h"
#include "toy.h"

namespace didan {
namespace {

using testing::random_record;
using testing::TempDir;
using testing::ToyShape;

std::vector<ArticleRecord> toy_records(std::size_t n, std::uint64_t seed,
                                       std::size_t max_pairs = 3) {
  std::mt19937_64 rng(seed);
  ToyShape shape;
  shape.max_pairs = max_pairs;
  std::vector<ArticleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(random_record(rng, shape, "t" + std::to_string(i)));
    out.back().label = i % 2 == 0 ? Label::kReal : Label::kGenerated;
  }
  return out;
}

std::vector<const ArticleRecord*> pointers(const std::vector<ArticleRecord>& records) {
  std::vector<const ArticleRecord*> out;
  for (const auto& r : records) out.push_back(&r);
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.d_vse = 4;
  c.hidden1 = 8;
  c.hidden2 = 4;
  c.batch_size = 4;
  c.epochs = 1;
  return c;
}

WarningSink silent() {
  return [](const std::string&) {};
}

TEST(MismatchNegatives, TwoArticlesSwapPairs) {
  auto records = toy_records(2, 1);
  for (auto& r : records) r.label = Label::kReal;
  const auto batch = pointers(records);
  std::mt19937_64 rng(0);
  const auto neg = sample_mismatch_negatives(batch, 1, rng);
  ASSERT_EQ(neg.size(), 2u);
  EXPECT_EQ(neg[0].article, &records[0]);
  EXPECT_EQ(neg[0].donor, &records[1]);
  EXPECT_EQ(neg[1].article, &records[1]);
  EXPECT_EQ(neg[1].donor, &records[0]);
  for (const auto& e : neg) {
    EXPECT_EQ(e.label, 0.0);
    EXPECT_EQ(e.pairs().data(), e.donor->pairs.data());
  }
}

TEST(MismatchNegatives, ZeroPerPositiveIsEmpty) {
  const auto records = toy_records(3, 2);
  std::mt19937_64 rng(0);
  EXPECT_TRUE(sample_mismatch_negatives(pointers(records), 0, rng).empty());
}

TEST(MismatchNegatives, SingleArticleBatchThrows) {
  const auto records = toy_records(1, 3);
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_mismatch_negatives(pointers(records), 1, rng), std::invalid_argument);
}

TEST(MismatchNegatives, DonorNeverSelfAndCoversOthers) {
  auto records = toy_records(8, 4);
  for (auto& r : records) r.label = Label::kReal;
  const auto batch = pointers(records);
  std::mt19937_64 rng(5);
  std::vector<std::vector<int>> hits(8, std::vector<int>(8, 0));
  for (int trial = 0; trial < 1000; ++trial) {
    for (const auto& e : sample_mismatch_negatives(batch, 1, rng)) {
      ASSERT_NE(e.article, e.donor);
      EXPECT_EQ(e.label, 0.0);
      ++hits[e.article - records.data()][e.donor - records.data()];
    }
  }
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      if (i != j) EXPECT_GT(hits[i][j], 80) << i << "," << j;  // ~143 expected
    }
}

TEST(MismatchNegatives, OnlyRealArticlesGetNegatives) {
  const auto records = toy_records(6, 6);  // alternating labels
  std::mt19937_64 rng(0);
  const auto neg = sample_mismatch_negatives(pointers(records), 2, rng);
  EXPECT_EQ(neg.size(), 6u);
  for (const auto& e : neg) EXPECT_EQ(e.article->label, Label::kReal);
}

TEST(BuildBatch, MismatchOnlyRegime) {
  auto records = toy_records(4, 7);
  for (auto& r : records) r.label = Label::kReal;
  TrainConfig c = small_config();
  c.generated_fraction = 0.0;
  std::mt19937_64 rng(0);
  const auto ex = build_batch(pointers(records), c, rng, silent());
  ASSERT_EQ(ex.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ex[i].label, 1.0);
    EXPECT_EQ(ex[i].donor, nullptr);
  }
  for (std::size_t i = 4; i < 8; ++i) {
    EXPECT_EQ(ex[i].label, 0.0);
    EXPECT_NE(ex[i].donor, nullptr);
  }
}

TEST(BuildBatch, GeneratedWithoutMismatchKeepsOwnPairs) {
  const auto records = toy_records(4, 8);
  TrainConfig c = small_config();
  c.use_mismatch = false;
  std::mt19937_64 rng(0);
  const auto ex = build_batch(pointers(records), c, rng, silent());
  ASSERT_EQ(ex.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ex[i].donor, nullptr);
    EXPECT_EQ(ex[i].label, i % 2 == 0 ? 1.0 : 0.0);
  }
}

TEST(BuildBatch, AllPositiveBatchWarns) {
  auto records = toy_records(3, 9);
  for (auto& r : records) r.label = Label::kReal;
  TrainConfig c = small_config();
  c.use_mismatch = false;
  std::vector<std::string> warnings;
  std::mt19937_64 rng(0);
  build_batch(pointers(records), c, rng, [&](const std::string& m) { warnings.push_back(m); });
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("only positive"), std::string::npos);
}

TEST(BuildBatch, EmptyInputThrows) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(build_batch({}, small_config(), rng, silent()), std::invalid_argument);
}

TEST(TrainingPool, RespectsGeneratedFraction) {
  using Counts = std::pair<std::size_t, std::size_t>;
  const auto records = toy_records(20, 10);  // 10 real, 10 generated
  auto count = [&](double f) {
    std::mt19937_64 rng(0);
    std::size_t real = 0, gen = 0;
    for (const auto* r : select_training_pool(records, f, rng)) {
      ++(r->label == Label::kReal ? real : gen);
    }
    return Counts(real, gen);
  };
  EXPECT_EQ(count(0.0), Counts(10, 0));
  EXPECT_EQ(count(0.5), Counts(10, 10));
  EXPECT_EQ(count(0.25), Counts(10, 3));
  EXPECT_EQ(count(1.0), Counts(0, 10));
  EXPECT_EQ(count(0.75), Counts(3, 10));
}

TEST(TrainConfig, ValidateRejectsBadFields) {
  TrainConfig c;
  EXPECT_NO_THROW(validate(c));
  c.batch_size = 1;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.lr = -1e-3;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.generated_fraction = 1.5;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(TrainConfig, NeiOffForcesIndicatorToZero) {
  TrainConfig c;
  c.use_nei = false;
  std::mt19937_64 rng(11);
  ModelDims dims;
  dims.d_text = 6;
  dims.d_image = 8;
  dims.d_vse = 4;
  dims.hidden1 = 5;
  dims.hidden2 = 3;
  const DidanParams<double> p = testing::random_params(dims, rng);
  for (int i = 0; i < 20; ++i) {
    ArticleRecord r = random_record(rng, ToyShape{});
    for (auto& pair : r.pairs) pair.caption_entities = r.body_entities;
    r.body_entities.insert("alice");
    for (auto& pair : r.pairs) pair.caption_entities.insert("alice");
    const auto trace = forward_article(r, p, std::nullopt, Mode::kEval, c.fusion());
    for (const auto& pt : trace.pairs) {
      EXPECT_EQ(pt.indicator, 0.0);
      EXPECT_EQ(pt.fused[pt.fused.size() - 1], 0.0);
    }
  }
}

TEST(Train, ZeroLearningRateLeavesWeightsUnchanged) {
  const auto records = toy_records(8, 12);
  TrainConfig c = small_config();
  c.lr = 0.0;
  c.epochs = 3;
  c.seed = 99;
  TrainOptions o;
  o.warn = silent();
  const TrainResult result = train(records, {}, c, o);
  std::mt19937_64 rng(c.seed);
  ModelDims dims;
  dims.d_text = 6;
  dims.d_image = 8;
  dims.d_vse = c.d_vse;
  dims.hidden1 = c.hidden1;
  dims.hidden2 = c.hidden2;
  const DidanParams<float> fresh = init_params<float>(dims, rng);
  EXPECT_EQ(result.params.weights, fresh.weights);
}

TEST(Train, FirstBatchLossNearLogTwo) {
  const auto records = toy_records(16, 13, /*max_pairs=*/1);
  TrainConfig c = small_config();
  c.lr = 0.0;
  c.batch_size = 16;
  std::vector<EpochMetrics> seen;
  TrainOptions o;
  o.warn = silent();
  o.on_metrics = [&](const EpochMetrics& m) { seen.push_back(m); };
  train(records, {}, c, o);
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen[0].split, "train");
  EXPECT_NEAR(seen[0].loss, std::log(2.0), 0.05);
}

TEST(Train, OneEpochTwiceGivesIdenticalCheckpoints) {
  const auto records = toy_records(4, 14);
  TrainConfig c = small_config();
  c.batch_size = 2;
  TempDir a, b;
  TrainOptions oa, ob;
  oa.out_dir = a.path();
  ob.out_dir = b.path();
  oa.warn = ob.warn = silent();
  train(records, records, c, oa);
  train(records, records, c, ob);
  for (const char* f : {"model.ddn", "epoch_001.ddn", "best.ddn", "metrics.jsonl"}) {
    ASSERT_TRUE(std::filesystem::exists(a.path() / f)) << f;
    EXPECT_EQ(read_file_bytes(a.path() / f), read_file_bytes(b.path() / f)) << f;
  }
}

TEST(Train, CheckpointCarriesAdamState) {
  const auto records = toy_records(6, 15);
  TrainConfig c = small_config();
  c.epochs = 2;
  TempDir dir;
  TrainOptions o;
  o.out_dir = dir.path();
  o.warn = silent();
  const TrainResult result = train(records, {}, c, o);
  const NamedTensors named = read_checkpoint(dir.path() / "model.ddn");
  const AdamState<float> adam = adam_from_named(named);
  EXPECT_EQ(adam.step, result.adam.step);
  EXPECT_EQ(adam.first_moment, result.adam.first_moment);
  EXPECT_EQ(adam.second_moment, result.adam.second_moment);
  EXPECT_FLOAT_EQ(static_cast<float>(adam.hyper.lr), static_cast<float>(c.lr));
  EXPECT_EQ(params_from_named(named), result.params);
}

TEST(Train, SeparableSyntheticDataDropsBelowLogTwo) {
  SynthConfig s;
  s.n_articles = 400;
  s.sigma = 0.3;
  s.image_signal = 1.5;
  s.caption_signal = 1.0;
  s.q_match = 1.0;
  s.q_mismatch = 0.0;
  const SynthSplits data = generate_records(s);
  TrainConfig c;
  c.d_vse = 8;
  c.hidden1 = 32;
  c.hidden2 = 16;
  c.epochs = 20;
  std::vector<EpochMetrics> train_metrics;
  TrainOptions o;
  o.warn = silent();
  o.on_metrics = [&](const EpochMetrics& m) {
    if (m.split == "train") train_metrics.push_back(m);
  };
  train(data.train, data.val, c, o);
  ASSERT_EQ(train_metrics.size(), 20u);
  EXPECT_LT(train_metrics.back().loss, std::log(2.0));
  EXPECT_LT(train_metrics.back().loss, train_metrics.front().loss);
}

TEST(Train, MetricsJsonHasSchema) {
  EpochMetrics m;
  m.epoch = 3;
  m.split = "val";
  m.loss = 0.5;
  m.accuracy = 0.75;
  m.examples = 12;
  const std::string j = metrics_to_json(m);
  for (const char* key :
       {"\"epoch\":3", "\"split\":\"val\"", "\"loss\":0.5", "\"accuracy\":0.75"}) {
    EXPECT_NE(j.find(key), std::string::npos) << j;
  }
}

TEST(Train, EmptyTrainingSetThrows) {
  EXPECT_THROW(train({}, {}, small_config()), std::invalid_argument);
}

}  // namespace
}  // namespace didan
