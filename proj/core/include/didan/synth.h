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

#ifndef DIDAN_SYNTH_H_
#define DIDAN_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "didan/manifest.h"
#include "didan/record.h"

namespace didan {

// Planted-inconsistency generator. Every article has a latent story vector
// z ~ N(0, I_k). Words, caption words and object features are noisy linear
// images of a latent through fixed random maps M_t [d_text x k] and
// M_i [d_image x k]:
//
//   article word  = M_t z_a + sigma * eps
//   caption word  = caption_signal * M_t z + sigma * caption_noise_scale * eps
//   object        = image_signal * M_i z + sigma * image_noise_scale * eps
//
// Real articles use z_a = z; generated ones draw an independent z_a. With
// probability missing_image_prob an article's images are unavailable and
// every object vector is zero, whatever its label. Each caption mentions a
// body entity with probability q_match (real) or q_mismatch (generated),
// otherwise entities of an unrelated topic.
//
// The defaults give the images a little more evidence than the captions,
// and the entity channel more than either.
struct SynthConfig {
  std::size_t n_articles = 2000;
  std::size_t d_text = 16;
  std::size_t d_image = 16;
  std::size_t latent_dim = 4;
  double sigma = 1.0;
  double caption_noise_scale = 1.0;
  double image_noise_scale = 1.0;
  double caption_signal = 0.3;
  double image_signal = 0.5;
  double missing_image_prob = 0.0;
  std::size_t n_topics = 40;
  std::size_t entity_pool_size = 8;
  std::size_t body_entities = 4;
  double q_match = 0.9;
  double q_mismatch = 0.1;
  std::array<double, 3> pair_count_probs = {0.608, 0.210, 0.182};
  std::size_t min_sentences = 2, max_sentences = 4;
  std::size_t min_words = 4, max_words = 10;
  std::size_t min_caption_words = 3, max_caption_words = 8;
  std::size_t min_objects = 2, max_objects = 6;
  std::array<double, 3> split_fractions = {0.70, 0.15, 0.15};
  std::uint64_t seed = 0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Throws std::invalid_argument. The oracle accepts q_match == q_mismatch
// (a zero-signal entity channel); generation requires q_mismatch < q_match.
void validate(const SynthConfig& config, bool allow_equal_q = false);

struct SynthSplits {
  std::vector<ArticleRecord> train, val, test;
};

// In-memory dataset. Labels alternate real/generated from index 0, so every
// split of even size is exactly balanced.
SynthSplits generate_records(const SynthConfig& config);

struct SynthDataset {
  std::filesystem::path train_manifest, val_manifest, test_manifest;
  SynthSplits splits;
};

// Writes blobs/ plus train.jsonl, val.jsonl and test.jsonl under `out_dir`.
SynthDataset generate_synthetic_dataset(const SynthConfig& config,
                                        const std::filesystem::path& out_dir);

// Monte-Carlo accuracy of the likelihood-ratio classifier that knows the
// generative process: the Gaussian evidence linking the article mean to the
// pairs plus the per-pair entity Bernoulli evidence. Articles are drawn
// from a stream independent of the dataset, with the same mixing maps.
double bayes_oracle_accuracy(const SynthConfig& config, std::size_t n_mc);

}  // namespace didan

#endif  // DIDAN_SYNTH_H_
