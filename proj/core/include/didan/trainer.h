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

#ifndef DIDAN_TRAINER_H_
#define DIDAN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "didan/adam.h"
#include "didan/model.h"
#include "didan/record.h"

namespace didan {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  // Share of generated articles among the training articles actually used.
  double generated_fraction = 0.5;
  bool use_mismatch = true;
  bool use_nei = true;
  ModalityAblation modality_ablation = ModalityAblation::kFull;
  // Mismatch negatives per real article; ignored when use_mismatch is false.
  std::size_t negatives_per_positive = 1;
  std::size_t d_vse = 512;
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 128;

  FusionOptions fusion() const { return {modality_ablation, use_nei}; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws std::invalid_argument on out-of-range fields.
void validate(const TrainConfig& config);

// One scored example: an article, the pairs it is scored against (a donor's
// pairs for mismatch negatives) and its effective label.
struct TrainExample {
  const ArticleRecord* article = nullptr;
  const ArticleRecord* donor = nullptr;  // null when the article's own pairs are used
  double label = 1.0;

  std::span<const ImageCaptionPair> pairs() const {
    return donor != nullptr ? std::span<const ImageCaptionPair>(donor->pairs)
                            : std::span<const ImageCaptionPair>(article->pairs);
  }
  ExampleView view() const { return {article, pairs(), label}; }
};

using WarningSink = std::function<void(const std::string&)>;
WarningSink stderr_warnings();

// For every real article, `k` examples pairing it with the full pair set of a
// uniformly chosen different article of the batch; label 0.
std::vector<TrainExample> sample_mismatch_negatives(
    std::span<const ArticleRecord* const> batch, std::size_t k, std::mt19937_64& rng);

// Own-pair examples for every article (real -> 1, generated -> 0) followed by
// mismatch negatives when enabled. Warns when no example carries label 0.
std::vector<TrainExample> build_batch(std::span<const ArticleRecord* const> batch,
                                      const TrainConfig& config, std::mt19937_64& rng,
                                      const WarningSink& warn = stderr_warnings());

// Keeps every real article and as many generated ones as the requested
// fraction allows, shrinking the real side if generated articles run short.
std::vector<const ArticleRecord*> select_training_pool(
    std::span<const ArticleRecord> records, double generated_fraction,
    std::mt19937_64& rng);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;  // mean per example
  double accuracy = 0.0;
  std::size_t examples = 0;
};

std::string metrics_to_json(const EpochMetrics& m);

struct TrainOptions {
  // When set, epoch_NNN.ddn, model.ddn, best.ddn and metrics.jsonl go here.
  std::optional<std::filesystem::path> out_dir;
  WarningSink warn = stderr_warnings();
  std::function<void(const EpochMetrics&)> on_metrics;
};

struct TrainResult {
  DidanParams<float> params;  // after the last epoch
  DidanParams<float> best;    // best validation accuracy, else the final params
  AdamState<float> adam;
  std::vector<EpochMetrics> metrics;
  std::size_t best_epoch = 0;
  std::size_t pool_real = 0;
  std::size_t pool_generated = 0;
};

// End-to-end minibatch training with a summed BCE loss. Deterministic given
// config.seed: parameter init, pool selection, shuffling and mismatch donors
// all draw from one generator. Throws NumericalError on a non-finite loss.
TrainResult train(std::span<const ArticleRecord> train_records,
                  std::span<const ArticleRecord> val_records, const TrainConfig& config,
                  const TrainOptions& options = {});

// Full checkpoint: weights, running stats, ADAM state and fusion options.
NamedTensors checkpoint_entries(const DidanParams<float>& params,
                                const AdamState<float>* adam, const FusionOptions& fusion);
AdamState<float> adam_from_named(const NamedTensors& named);

}  // namespace didan

#endif  // DIDAN_TRAINER_H_
