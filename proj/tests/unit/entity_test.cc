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

#include <random>

#include <gtest/gtest.h>

#include "didan/entity.h"

namespace didan {
namespace {

EntitySet set_of(std::initializer_list<const char*> raw) {
  EntitySet s;
  for (const char* r : raw) s.insert(r);
  return s;
}

TEST(NormalizeEntity, Examples) {
  EXPECT_EQ(normalize_entity("Mrs  Betram."), "mrs betram");
  EXPECT_EQ(normalize_entity("   "), std::nullopt);
  EXPECT_EQ(normalize_entity("U.K."), "u.k");
  EXPECT_EQ(normalize_entity("\t\"New   York\"\n"), "new york");
  EXPECT_EQ(normalize_entity("..."), std::nullopt);
}

TEST(NormalizeEntity, Idempotent) {
  for (const char* raw : {"Mrs  Betram.", "U.K.", " (Theresa May) ", "a-b c"}) {
    const auto once = normalize_entity(raw);
    ASSERT_TRUE(once.has_value());
    EXPECT_EQ(normalize_entity(*once), once);
  }
}

TEST(EntitySet, SortedAndDeduplicated) {
  const EntitySet s = set_of({"London", "london ", "Bath", ""});
  EXPECT_EQ(s.items(), (std::vector<std::string>{"bath", "london"}));
  EXPECT_THROW(EntitySet::from_normalized({"ok", ""}), std::invalid_argument);
}

TEST(ComputeIndicator, Examples) {
  EXPECT_EQ(compute_indicator(set_of({"mrs betram", "london"}), set_of({"mrs betram"})), 1.0);
  EXPECT_EQ(compute_indicator(set_of({"boris johnson"}), set_of({"theresa may"})), 0.0);
  EXPECT_EQ(compute_indicator(set_of({"boris johnson"}), EntitySet{}), 0.0);
}

TEST(ComputeIndicator, ExactMatchOnly) {
  EXPECT_EQ(compute_indicator(set_of({"Mrs Betram"}), set_of({"Betram"})), 0.0);
}

const char* const kPool[] = {"ann", "ben", "cy", "dee", "eve", "fay"};

EntitySet random_set(std::mt19937_64& rng) {
  EntitySet s;
  std::bernoulli_distribution coin(0.3);
  for (const char* n : kPool) {
    if (coin(rng)) s.insert(n);
  }
  return s;
}

TEST(ComputeIndicator, SymmetricOverRandomSets) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const EntitySet a = random_set(rng), b = random_set(rng);
    EXPECT_EQ(compute_indicator(a, b), compute_indicator(b, a));
  }
}

TEST(ComputeIndicator, MonotoneUnderInsertion) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kPool) - 1);
  for (int i = 0; i < 1000; ++i) {
    EntitySet a = random_set(rng), b = random_set(rng);
    const double before = compute_indicator(a, b);
    (i % 2 ? a : b).insert(kPool[pick(rng)]);
    EXPECT_GE(compute_indicator(a, b), before);
  }
}

TEST(ComputeIndicator, InvariantUnderRenormalization) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const EntitySet a = random_set(rng), b = random_set(rng);
    const EntitySet a2 = EntitySet::from_raw(a.items());
    EXPECT_EQ(a2, a);
    EXPECT_EQ(compute_indicator(a2, b), compute_indicator(a, b));
  }
}

}  // namespace
}  // namespace didan
