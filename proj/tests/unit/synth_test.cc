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

#include "didan/synth.h"

#include <gtest/gtest.h>

#include <random>

#include "didan/ablation.h"
#include "didan/binary_io.h"
#include "didan/config_io.h"
#include "didan/manifest.h"
#include "toy.h"

namespace didan {
namespace {

using testing::TempDir;

SynthConfig small_synth(std::size_t n = 40) {
  SynthConfig c;
  c.n_articles = n;
  return c;
}

TEST(Synth, SameSeedSameRecords) {
  const SynthSplits a = generate_records(small_synth());
  const SynthSplits b = generate_records(small_synth());
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].article_id, b.train[i].article_id);
    EXPECT_EQ(a.train[i].sentences, b.train[i].sentences);
    ASSERT_EQ(a.train[i].pairs.size(), b.train[i].pairs.size());
    EXPECT_EQ(a.train[i].pairs[0].object_feats, b.train[i].pairs[0].object_feats);
  }
  SynthConfig other = small_synth();
  other.seed = 1;
  EXPECT_NE(generate_records(other).train[0].sentences, a.train[0].sentences);
}

TEST(Synth, WrittenDatasetIsByteIdentical) {
  TempDir x, y;
  const SynthDataset a = generate_synthetic_dataset(small_synth(20), x.path());
  generate_synthetic_dataset(small_synth(20), y.path());
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(x.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), x.path());
    EXPECT_EQ(read_file_bytes(entry.path()), read_file_bytes(y.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 3u);
  const auto loaded = load_records(load_manifest(a.train_manifest));
  ASSERT_EQ(loaded.size(), a.splits.train.size());
  EXPECT_EQ(loaded[3].sentences, a.splits.train[3].sentences);
  EXPECT_EQ(loaded[3].body_entities, a.splits.train[3].body_entities);
}

TEST(Synth, BalancedSplitsAndShapes) {
  const SynthConfig c = small_synth(200);
  const SynthSplits s = generate_records(c);
  EXPECT_EQ(s.train.size(), 140u);
  EXPECT_EQ(s.val.size(), 30u);
  EXPECT_EQ(s.test.size(), 30u);
  for (const auto* split : {&s.train, &s.val, &s.test}) {
    std::size_t real = 0;
    for (const auto& r : *split) {
      real += r.label == Label::kReal;
      ASSERT_GE(r.pairs.size(), 1u);
      ASSERT_LE(r.pairs.size(), 3u);
      EXPECT_EQ(r.sentences[0].cols(), c.d_text);
      EXPECT_EQ(r.pairs[0].object_feats.cols(), c.d_image);
    }
    EXPECT_EQ(2 * real, split->size());
  }
}

TEST(Synth, ValidateRejectsBadConfigs) {
  SynthConfig c;
  EXPECT_NO_THROW(validate(c));
  c.q_mismatch = c.q_match;
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_NO_THROW(validate(c, /*allow_equal_q=*/true));
  c = SynthConfig{};
  c.sigma = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = SynthConfig{};
  c.split_fractions = {0.5, 0.5, 0.5};
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = SynthConfig{};
  c.n_articles = 1;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Oracle, NoiselessConfigIsPerfect) {
  SynthConfig c;
  c.sigma = 1e-3;
  c.image_signal = 2.0;
  c.caption_signal = 2.0;
  c.q_match = 1.0;
  c.q_mismatch = 0.0;
  EXPECT_DOUBLE_EQ(bayes_oracle_accuracy(c, 2000), 1.0);
}

TEST(Oracle, ZeroSignalIsChance) {
  SynthConfig c;
  c.image_signal = 0.0;
  c.caption_signal = 0.0;
  c.q_match = c.q_mismatch = 0.5;
  EXPECT_NEAR(bayes_oracle_accuracy(c, 4000), 0.5, 0.03);
}

TEST(Oracle, DefaultsAreHardButLearnable) {
  const double acc = bayes_oracle_accuracy(SynthConfig{}, 4000);
  EXPECT_GT(acc, 0.9);
  EXPECT_LT(acc, 1.0);
}

TEST(Oracle, DecreasesWithNoise) {
  double previous = 1.1;
  for (double sigma : {0.5, 1.5, 4.0}) {
    SynthConfig c;
    c.sigma = sigma;
    c.q_match = 0.6;
    c.q_mismatch = 0.4;
    const double acc = bayes_oracle_accuracy(c, 4000);
    EXPECT_LT(acc, previous) << "sigma " << sigma;
    previous = acc;
  }
}

TEST(Oracle, IncreasesWithEntityGap) {
  double previous = 0.0;
  for (double gap : {0.1, 0.4, 0.8}) {
    SynthConfig c;
    c.image_signal = c.caption_signal = 0.2;
    c.q_match = 0.5 + gap / 2;
    c.q_mismatch = 0.5 - gap / 2;
    const double acc = bayes_oracle_accuracy(c, 4000);
    EXPECT_GT(acc, previous) << "gap " << gap;
    previous = acc;
  }
}

TEST(ConfigIo, TrainConfigRoundTrip) {
  TrainConfig c;
  c.lr = 5e-4;
  c.use_nei = false;
  c.modality_ablation = ModalityAblation::kNoCaptions;
  c.generated_fraction = 0.25;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  const TrainConfig partial = train_config_from_json(R"({"epochs": 3})", c);
  EXPECT_EQ(partial.epochs, 3u);
  EXPECT_EQ(partial.lr, 5e-4);
}

TEST(ConfigIo, SynthConfigRoundTrip) {
  SynthConfig c;
  c.sigma = 0.75;
  c.split_fractions = {0.5, 0.25, 0.25};
  c.seed = 12;
  EXPECT_EQ(synth_config_from_json(to_json(c)), c);
}

TEST(ConfigIo, UnknownAndIllTypedKeysRejected) {
  try {
    train_config_from_json(R"({"learning_rate": 0.1})");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
  EXPECT_THROW(train_config_from_json(R"({"epochs": "ten"})"), std::invalid_argument);
  EXPECT_THROW(synth_config_from_json(R"({"sigmaa": 1})"), std::invalid_argument);
  EXPECT_THROW(train_config_from_json("[1, 2]"), std::invalid_argument);
}

TEST(AblationMatrix, AxesExpandToCrossProduct) {
  const AblationMatrix m = parse_ablation_matrix(R"({
    "synth": {"n_articles": 40},
    "base": {"epochs": 2, "d_vse": 4},
    "axes": {"use_mismatch": [true, false], "modality_ablation": ["full", "no_images"]}
  })");
  ASSERT_TRUE(m.synth.has_value());
  EXPECT_EQ(m.synth->n_articles, 40u);
  ASSERT_EQ(m.cells.size(), 4u);
  for (const auto& cell : m.cells) {
    EXPECT_EQ(cell.config.epochs, 2u);
    EXPECT_EQ(cell.config.d_vse, 4u);
  }
  EXPECT_NE(m.cells[0].name, m.cells[1].name);
}

TEST(AblationMatrix, RejectsMalformedInput) {
  EXPECT_THROW(parse_ablation_matrix(R"({"cells": [{"name": "a"}]})"), std::invalid_argument);
  EXPECT_THROW(parse_ablation_matrix(R"({"synth": {}, "cells": [], "colour": 1})"),
               std::invalid_argument);
  EXPECT_THROW(parse_ablation_matrix(R"({"synth": {}, "cells": [{"name": "a", "epochs": 0}]})"),
               std::invalid_argument);
}

TEST(AblationMatrix, DataPathsResolveAgainstBaseDir) {
  const AblationMatrix m = parse_ablation_matrix(
      R"({"data": {"train": "t.jsonl", "val": "/abs/v.jsonl", "test": "x/te.jsonl"},
          "cells": [{"name": "only"}]})",
      "/root/base");
  ASSERT_TRUE(m.manifests.has_value());
  EXPECT_EQ((*m.manifests)[0], std::filesystem::path("/root/base/t.jsonl"));
  EXPECT_EQ((*m.manifests)[1], std::filesystem::path("/abs/v.jsonl"));
}

TEST(RunAblation, DuplicateCellsGiveIdenticalResults) {
  const AblationMatrix m = parse_ablation_matrix(R"({
    "synth": {"n_articles": 60},
    "base": {"epochs": 2, "d_vse": 4, "hidden1": 8, "hidden2": 4, "batch_size": 8},
    "cells": [{"name": "a"}, {"name": "b"}],
    "include_cca": true,
    "oracle_mc": 200
  })");
  const auto quiet = [](const std::string&) {};
  const AblationReport one = run_ablation(m, 1, quiet);
  const AblationReport two = run_ablation(m, 2, quiet);
  ASSERT_EQ(one.cells.size(), 2u);
  EXPECT_EQ(one.cells[0].test.accuracy, one.cells[1].test.accuracy);
  EXPECT_EQ(one.cells[0].val.mean_score_real, one.cells[1].val.mean_score_real);
  EXPECT_EQ(one.n_train + one.n_val + one.n_test, 60u);
  EXPECT_TRUE(one.oracle_accuracy.has_value());
  EXPECT_TRUE(one.cca.has_value());
  EXPECT_EQ(to_json(one), to_json(two));
  EXPECT_NE(to_json(one).find("\"split_fractions\""), std::string::npos);
}

}  // namespace
}  // namespace didan
