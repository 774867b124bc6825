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

#ifndef DIDAN_MODEL_H_
#define DIDAN_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "didan/binary_io.h"
#include "didan/graph.h"
#include "didan/params.h"
#include "didan/record.h"

namespace didan {

// Which evidence reaches the discriminator's visual slot.
//   kFull         mean of word-specific image representations, indicator kept
//   kNoImages     mean of projected caption words, indicator kept
//   kNoCaptions   mean of projected object features, indicator forced to 0
//   kArticlesOnly zeros in the visual slot, indicator forced to 0
enum class ModalityAblation { kFull, kNoImages, kNoCaptions, kArticlesOnly };

std::string_view to_string(ModalityAblation m);
ModalityAblation parse_modality(std::string_view name);

struct FusionOptions {
  ModalityAblation modality = ModalityAblation::kFull;
  bool use_nei = true;
};

struct ModelDims {
  std::size_t d_text = 768;
  std::size_t d_image = 2048;
  std::size_t d_vse = 512;
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 128;

  std::size_t fused_width() const { return 2 * d_vse + 1; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kDecisionThreshold = 0.5;

// Learnable weights plus batch-norm running statistics.
//
// Weight names: w_art [d_text x d_vse], w_cap [d_text x d_vse],
// w_vis [d_image x d_vse], fc{1,2,3}.weight [in x out], fc{1,2,3}.bias
// [1 x out], norm{1,2}.gamma / norm{1,2}.beta [1 x hidden]. Running
// statistics live under bn.{1,2}.running_mean / bn.{1,2}.running_var.
template <typename T>
struct DidanParams {
  ModelDims dims;
  ParamStore<T> weights;
  ParamStore<T> running;

  template <typename U>
  DidanParams<U> cast() const {
    return {dims, weights.template cast<U>(), running.template cast<U>()};
  }
  friend bool operator==(const DidanParams&, const DidanParams&) = default;
};

// Projections and FC weights uniform in +-sqrt(6 / (fan_in + fan_out)); biases
// and the output layer zero so a fresh model scores every pair at 0.5.
template <typename T>
DidanParams<T> init_params(const ModelDims& dims, std::mt19937_64& rng);

// Same layout with every weight and bias zero (gamma 1, running var 1).
template <typename T>
DidanParams<T> zero_params(const ModelDims& dims);

// A record paired with the image-caption pairs it is scored against (its own
// or a donor's) and the label used for the loss.
struct ExampleView {
  const ArticleRecord* article = nullptr;
  std::span<const ImageCaptionPair> pairs;
  double label = 1.0;
};

template <typename T>
struct PairAttention {
  NodeId projected_words;    // [n_c x d_vse]
  NodeId projected_objects;  // [n_o x d_vse]
  NodeId similarity;         // [n_c x n_o], word-major
  NodeId attention;          // [n_c x n_o], rows sum to 1 over objects
  NodeId word_reps;          // [n_c x d_vse]
};

// Mean over sentences of the mean projected word of each sentence.
template <typename T>
NodeId encode_article(Graph<T>& g, const DidanParams<T>& params,
                      const ArticleRecord& record);

template <typename T>
PairAttention<T> attend_pair(Graph<T>& g, const DidanParams<T>& params,
                             const ImageCaptionPair& pair);

// [A_f | visual slot | indicator] as a [1 x (2 d_vse + 1)] row.
template <typename T>
NodeId fuse_pair(Graph<T>& g, const DidanParams<T>& params, NodeId article_rep,
                 const ImageCaptionPair& pair, double indicator,
                 const FusionOptions& fusion, PairAttention<T>* attention_out);

struct DiscriminatorNodes {
  NodeId scores;  // [P x 1] pair authenticity scores
  NodeId norm1;
  NodeId norm2;
};

// FC-ReLU-BN-FC-ReLU-BN-FC-sigmoid over a stack of fused rows.
template <typename T>
DiscriminatorNodes discriminate(Graph<T>& g, const DidanParams<T>& params,
                                NodeId fused_rows, Mode mode);

// Single-pair score; train mode needs a batch, so this is eval-mode only.
template <typename T>
NodeId score_pair(Graph<T>& g, const DidanParams<T>& params, NodeId article_rep,
                  const ImageCaptionPair& pair, double indicator,
                  const FusionOptions& fusion);

// 1 - prod(1 - p_i), computed in log space with each p_i clamped to
// 1 - 1e-7. Throws on an empty list.
double aggregate_authenticity(std::span<const double> pair_scores);

template <typename T>
NodeId bce_loss(Graph<T>& g, NodeId authenticity, double label);

template <typename T>
struct PairNodes {
  std::string pair_id;
  double indicator = 0.0;
  std::optional<PairAttention<T>> attention;
  NodeId fused;
};

template <typename T>
struct BatchForward {
  std::vector<NodeId> article_reps;
  std::vector<std::vector<PairNodes<T>>> pairs;  // per example
  std::vector<std::size_t> pair_offsets;         // first row per example
  DiscriminatorNodes disc;
  std::vector<NodeId> authenticity;  // [1] per example
};

// Scores a batch of examples with one shared discriminator pass, which is
// what batch-norm statistics are computed over in train mode.
template <typename T>
BatchForward<T> forward_batch(Graph<T>& g, const DidanParams<T>& params,
                              std::span<const ExampleView> examples, Mode mode,
                              const FusionOptions& fusion);

// Sum of per-example BCE losses.
template <typename T>
NodeId batch_loss(Graph<T>& g, const BatchForward<T>& fwd,
                  std::span<const ExampleView> examples);

// Folds the batch statistics of a train-mode forward into the running stats.
template <typename T>
void update_running_stats(DidanParams<T>& params, const Graph<T>& g,
                          const BatchForward<T>& fwd);

template <typename T>
struct PairTrace {
  std::string pair_id;
  Tensor<T> similarity;  // [n_o x n_c]
  Tensor<T> attention;   // [n_o x n_c], columns sum to 1
  Tensor<T> word_reps;   // [n_c x d_vse]
  Tensor<T> fused;       // [1 x (2 d_vse + 1)]
  double indicator = 0.0;
  double score = 0.0;
};

template <typename T>
struct ForwardTrace {
  Tensor<T> article_rep;  // [1 x d_vse]
  std::vector<PairTrace<T>> pairs;
  double authenticity = 0.0;
};

template <typename T>
ForwardTrace<T> extract_trace(const Graph<T>& g, const BatchForward<T>& fwd,
                              std::size_t example);

// Full forward for one article. When `substituted_pairs` is given those pairs
// are scored instead of the record's own, with the indicator recomputed
// against the record's body entities.
template <typename T>
ForwardTrace<T> forward_article(
    const ArticleRecord& record, const DidanParams<T>& params,
    std::optional<std::span<const ImageCaptionPair>> substituted_pairs = std::nullopt,
    Mode mode = Mode::kEval, const FusionOptions& fusion = {});

// Eval-mode authenticity for many records, batched for throughput.
std::vector<double> predict_authenticity(const DidanParams<float>& params,
                                         std::span<const ArticleRecord> records,
                                         const FusionOptions& fusion,
                                         std::size_t batch_size = 64);

// Checkpoint mapping. Weights keep their names; running stats already carry
// the reserved "bn." prefix; fusion options are stored under "meta.".
NamedTensors params_to_named(const DidanParams<float>& params);
DidanParams<float> params_from_named(const NamedTensors& named);
void fusion_to_named(const FusionOptions& fusion, NamedTensors& named);
FusionOptions fusion_from_named(const NamedTensors& named);

}  // namespace didan

#endif  // DIDAN_MODEL_H_
