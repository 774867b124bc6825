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

#include "didan/evaluate.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

namespace didan {
namespace {

std::vector<Label> random_labels(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.3);
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(coin(rng) ? Label::kReal : Label::kGenerated);
  return out;
}

TEST(EvaluateScores, ConstantHalfGivesClassBalance) {
  std::mt19937_64 rng(1);
  const auto labels = random_labels(rng, 101);
  const std::vector<double> scores(labels.size(), 0.5);
  const EvalReport r = evaluate_scores(scores, labels, 0.5);
  const double real = static_cast<double>(std::count(labels.begin(), labels.end(), Label::kReal));
  EXPECT_DOUBLE_EQ(r.accuracy, real / 101.0);
  EXPECT_EQ(r.generated_as_real, 101 - static_cast<std::size_t>(real));
  EXPECT_DOUBLE_EQ(r.accuracy_real, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy_generated, 0.0);
}

TEST(EvaluateScores, LabelScoresArePerfect) {
  std::mt19937_64 rng(2);
  const auto labels = random_labels(rng, 50);
  std::vector<double> scores;
  for (Label l : labels) scores.push_back(label_value(l));
  const EvalReport r = evaluate_scores(scores, labels, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_score_real, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_score_generated, 0.0);
}

TEST(EvaluateScores, InvariantUnderReordering) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto labels = random_labels(rng, 30);
    std::vector<double> scores;
    for (std::size_t i = 0; i < labels.size(); ++i) scores.push_back(u(rng));
    const EvalReport a = evaluate_scores(scores, labels, 0.5);
    std::vector<std::size_t> perm(labels.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> s2;
    std::vector<Label> l2;
    for (std::size_t i : perm) {
      s2.push_back(scores[i]);
      l2.push_back(labels[i]);
    }
    const EvalReport b = evaluate_scores(s2, l2, 0.5);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.real_as_real, b.real_as_real);
    EXPECT_EQ(a.generated_as_generated, b.generated_as_generated);
    EXPECT_EQ(a.real_as_real + a.real_as_generated + a.generated_as_real + a.generated_as_generated,
              a.n);
  }
}

TEST(EvaluateScores, ThresholdIsInclusive) {
  const std::vector<double> scores = {0.5};
  const std::vector<Label> labels = {Label::kReal};
  EXPECT_EQ(evaluate_scores(scores, labels, 0.5).real_as_real, 1u);
}

TEST(EvaluateScores, RejectsEmptyAndMismatchedInput) {
  EXPECT_THROW(evaluate_scores({}, {}, 0.5), std::invalid_argument);
  const std::vector<double> scores = {0.1, 0.2};
  const std::vector<Label> labels = {Label::kReal};
  EXPECT_THROW(evaluate_scores(scores, labels, 0.5), std::invalid_argument);
}

TEST(EvaluateScores, AbsentClassIsNullInJson) {
  const std::vector<double> scores = {0.9, 0.2};
  const std::vector<Label> labels = {Label::kReal, Label::kReal};
  const EvalReport r = evaluate_scores(scores, labels, 0.5);
  EXPECT_TRUE(std::isnan(r.accuracy_generated));
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_TRUE(j["accuracy_generated"].is_null());
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 0.5);
  EXPECT_EQ(j["n"].get<int>(), 2);
  EXPECT_EQ(to_json(r).find('\n'), std::string::npos);
}

}  // namespace
}  // namespace didan
