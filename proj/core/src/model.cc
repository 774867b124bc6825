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

#include "didan/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "didan/entity.h"
#include "didan/errors.h"

namespace didan {
namespace {

template <typename T>
Tensor<T> glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t({fan_in, fan_out});
  for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
void add_layout(DidanParams<T>& p) {
  const ModelDims& d = p.dims;
  p.weights.set("w_art", Tensor<T>({d.d_text, d.d_vse}));
  p.weights.set("w_cap", Tensor<T>({d.d_text, d.d_vse}));
  p.weights.set("w_vis", Tensor<T>({d.d_image, d.d_vse}));
  p.weights.set("fc1.weight", Tensor<T>({d.fused_width(), d.hidden1}));
  p.weights.set("fc1.bias", Tensor<T>({1, d.hidden1}));
  p.weights.set("norm1.gamma", Tensor<T>::filled({1, d.hidden1}, T{1}));
  p.weights.set("norm1.beta", Tensor<T>({1, d.hidden1}));
  p.weights.set("fc2.weight", Tensor<T>({d.hidden1, d.hidden2}));
  p.weights.set("fc2.bias", Tensor<T>({1, d.hidden2}));
  p.weights.set("norm2.gamma", Tensor<T>::filled({1, d.hidden2}, T{1}));
  p.weights.set("norm2.beta", Tensor<T>({1, d.hidden2}));
  p.weights.set("fc3.weight", Tensor<T>({d.hidden2, 1}));
  p.weights.set("fc3.bias", Tensor<T>({1, 1}));
  p.running.set("bn.1.running_mean", Tensor<T>({1, d.hidden1}));
  p.running.set("bn.1.running_var", Tensor<T>::filled({1, d.hidden1}, T{1}));
  p.running.set("bn.2.running_mean", Tensor<T>({1, d.hidden2}));
  p.running.set("bn.2.running_var", Tensor<T>::filled({1, d.hidden2}, T{1}));
}

template <typename T>
Tensor<T> to_compute(const FeatureTensor& t) {
  if constexpr (std::is_same_v<T, float>) {
    return t;
  } else {
    return t.template cast<T>();
  }
}

template <typename T>
void check_dims(const DidanParams<T>& params, const ImageCaptionPair& pair) {
  if (pair.caption_words.cols() != params.dims.d_text ||
      pair.object_feats.cols() != params.dims.d_image) {
    throw ShapeError("pair '" + pair.pair_id + "' has caption width " +
                     std::to_string(pair.caption_words.cols()) + " / object width " +
                     std::to_string(pair.object_feats.cols()) + ", model expects " +
                     std::to_string(params.dims.d_text) + " / " +
                     std::to_string(params.dims.d_image));
  }
}

}  // namespace

std::string_view to_string(ModalityAblation m) {
  switch (m) {
    case ModalityAblation::kFull: return "full";
    case ModalityAblation::kNoImages: return "no_images";
    case ModalityAblation::kNoCaptions: return "no_captions";
    case ModalityAblation::kArticlesOnly: return "articles_only";
  }
  return "full";
}

ModalityAblation parse_modality(std::string_view name) {
  for (auto m : {ModalityAblation::kFull, ModalityAblation::kNoImages,
                 ModalityAblation::kNoCaptions, ModalityAblation::kArticlesOnly}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown modality ablation '" + std::string(name) +
                              "' (expected full, no_images, no_captions, articles_only)");
}

template <typename T>
DidanParams<T> zero_params(const ModelDims& dims) {
  DidanParams<T> p;
  p.dims = dims;
  add_layout(p);
  return p;
}

template <typename T>
DidanParams<T> init_params(const ModelDims& dims, std::mt19937_64& rng) {
  DidanParams<T> p = zero_params<T>(dims);
  p.weights.set("w_art", glorot<T>(dims.d_text, dims.d_vse, rng));
  p.weights.set("w_cap", glorot<T>(dims.d_text, dims.d_vse, rng));
  p.weights.set("w_vis", glorot<T>(dims.d_image, dims.d_vse, rng));
  p.weights.set("fc1.weight", glorot<T>(dims.fused_width(), dims.hidden1, rng));
  p.weights.set("fc2.weight", glorot<T>(dims.hidden1, dims.hidden2, rng));
  return p;
}

template <typename T>
NodeId encode_article(Graph<T>& g, const DidanParams<T>& params,
                      const ArticleRecord& record) {
  if (record.sentences.empty()) {
    throw ShapeError("article '" + record.article_id + "' has no sentences");
  }
  // Projection is linear, so averaging before projecting gives the same
  // two-level mean of projected words with one matmul per article.
  std::vector<NodeId> sentence_means;
  sentence_means.reserve(record.sentences.size());
  for (const auto& s : record.sentences) {
    if (s.cols() != params.dims.d_text) {
      throw ShapeError("article '" + record.article_id + "' sentence width " +
                       std::to_string(s.cols()) + " != d_text " +
                       std::to_string(params.dims.d_text));
    }
    sentence_means.push_back(g.mean_rows(g.constant(to_compute<T>(s))));
  }
  NodeId article_mean = sentence_means.size() == 1
                            ? sentence_means[0]
                            : g.mean_rows(g.concat_rows(sentence_means));
  return g.matmul(article_mean, g.parameter("w_art"));
}

template <typename T>
PairAttention<T> attend_pair(Graph<T>& g, const DidanParams<T>& params,
                             const ImageCaptionPair& pair) {
  check_dims(params, pair);
  PairAttention<T> out;
  out.projected_words =
      g.matmul(g.constant(to_compute<T>(pair.caption_words)), g.parameter("w_cap"));
  out.projected_objects =
      g.matmul(g.constant(to_compute<T>(pair.object_feats)), g.parameter("w_vis"));
  out.similarity = g.cosine_matrix(out.projected_words, out.projected_objects);
  out.attention = g.softmax_rows(out.similarity);
  out.word_reps = g.matmul(out.attention, out.projected_objects);
  return out;
}

template <typename T>
NodeId fuse_pair(Graph<T>& g, const DidanParams<T>& params, NodeId article_rep,
                 const ImageCaptionPair& pair, double indicator,
                 const FusionOptions& fusion, PairAttention<T>* attention_out) {
  check_dims(params, pair);
  double b = fusion.use_nei ? indicator : 0.0;
  NodeId visual;
  switch (fusion.modality) {
    case ModalityAblation::kFull: {
      PairAttention<T> att = attend_pair(g, params, pair);
      visual = g.mean_rows(att.word_reps);
      if (attention_out != nullptr) *attention_out = att;
      break;
    }
    case ModalityAblation::kNoImages:
      visual = g.mean_rows(g.matmul(g.constant(to_compute<T>(pair.caption_words)),
                                    g.parameter("w_cap")));
      break;
    case ModalityAblation::kNoCaptions:
      visual = g.mean_rows(g.matmul(g.constant(to_compute<T>(pair.object_feats)),
                                    g.parameter("w_vis")));
      b = 0.0;
      break;
    case ModalityAblation::kArticlesOnly:
      visual = g.constant(Tensor<T>({1, params.dims.d_vse}));
      b = 0.0;
      break;
  }
  const NodeId indicator_node = g.constant(Tensor<T>({1, 1}, {static_cast<T>(b)}));
  const NodeId parts[] = {article_rep, visual, indicator_node};
  return g.concat_last_axis(parts);
}

template <typename T>
DiscriminatorNodes discriminate(Graph<T>& g, const DidanParams<T>& params,
                                NodeId fused_rows, Mode mode) {
  const T eps = static_cast<T>(kBatchNormEps);
  const auto& running = params.running;
  DiscriminatorNodes out;
  NodeId h = g.relu(g.add(g.matmul(fused_rows, g.parameter("fc1.weight")),
                          g.parameter("fc1.bias")));
  out.norm1 = g.batchnorm(h, g.parameter("norm1.gamma"), g.parameter("norm1.beta"),
                          mode, &running.get("bn.1.running_mean"),
                          &running.get("bn.1.running_var"), eps);
  h = g.relu(g.add(g.matmul(out.norm1, g.parameter("fc2.weight")),
                   g.parameter("fc2.bias")));
  out.norm2 = g.batchnorm(h, g.parameter("norm2.gamma"), g.parameter("norm2.beta"),
                          mode, &running.get("bn.2.running_mean"),
                          &running.get("bn.2.running_var"), eps);
  const NodeId logits = g.add(g.matmul(out.norm2, g.parameter("fc3.weight")),
                              g.parameter("fc3.bias"));
  out.scores = g.sigmoid(logits);
  return out;
}

template <typename T>
NodeId score_pair(Graph<T>& g, const DidanParams<T>& params, NodeId article_rep,
                  const ImageCaptionPair& pair, double indicator,
                  const FusionOptions& fusion) {
  const NodeId fused = fuse_pair(g, params, article_rep, pair, indicator, fusion,
                                 static_cast<PairAttention<T>*>(nullptr));
  return discriminate(g, params, fused, Mode::kEval).scores;
}

double aggregate_authenticity(std::span<const double> pair_scores) {
  if (pair_scores.empty()) {
    throw std::invalid_argument("aggregate_authenticity: empty score list");
  }
  const double hi = 1.0 - kNoisyOrClamp;
  double log_keep = 0.0;
  for (double p : pair_scores) log_keep += std::log1p(-std::min(p, hi));
  return -std::expm1(log_keep);
}

template <typename T>
NodeId bce_loss(Graph<T>& g, NodeId authenticity, double label) {
  if (label != 0.0 && label != 1.0) {
    throw std::invalid_argument("bce_loss: label must be 0 or 1");
  }
  return g.bce(authenticity, static_cast<T>(label));
}

template <typename T>
BatchForward<T> forward_batch(Graph<T>& g, const DidanParams<T>& params,
                              std::span<const ExampleView> examples, Mode mode,
                              const FusionOptions& fusion) {
  if (examples.empty()) throw std::invalid_argument("forward_batch: no examples");
  BatchForward<T> fwd;
  std::vector<NodeId> fused_rows;
  for (const ExampleView& ex : examples) {
    if (ex.article == nullptr || ex.pairs.empty() ||
        ex.pairs.size() > kMaxPairsPerArticle) {
      throw std::invalid_argument("forward_batch: example needs an article and 1 to " +
                                  std::to_string(kMaxPairsPerArticle) + " pairs");
    }
    const NodeId art = encode_article(g, params, *ex.article);
    fwd.article_reps.push_back(art);
    fwd.pair_offsets.push_back(fused_rows.size());
    std::vector<PairNodes<T>> pair_nodes;
    for (const ImageCaptionPair& pair : ex.pairs) {
      PairNodes<T> pn;
      pn.pair_id = pair.pair_id;
      pn.indicator = compute_indicator(ex.article->body_entities, pair.caption_entities);
      PairAttention<T> att;
      pn.fused = fuse_pair(g, params, art, pair, pn.indicator, fusion, &att);
      if (fusion.modality == ModalityAblation::kFull) pn.attention = att;
      if (!fusion.use_nei || fusion.modality == ModalityAblation::kNoCaptions ||
          fusion.modality == ModalityAblation::kArticlesOnly) {
        pn.indicator = 0.0;
      }
      fused_rows.push_back(pn.fused);
      pair_nodes.push_back(std::move(pn));
    }
    fwd.pairs.push_back(std::move(pair_nodes));
  }
  const NodeId stacked =
      fused_rows.size() == 1 ? fused_rows[0] : g.concat_rows(fused_rows);
  fwd.disc = discriminate(g, params, stacked, mode);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const NodeId slice =
        g.slice_rows(fwd.disc.scores, fwd.pair_offsets[i], examples[i].pairs.size());
    fwd.authenticity.push_back(g.noisy_or(slice));
  }
  return fwd;
}

template <typename T>
NodeId batch_loss(Graph<T>& g, const BatchForward<T>& fwd,
                  std::span<const ExampleView> examples) {
  std::vector<NodeId> losses;
  losses.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    losses.push_back(bce_loss(g, fwd.authenticity[i], examples[i].label));
  }
  return losses.size() == 1 ? losses[0] : g.sum(losses);
}

template <typename T>
void update_running_stats(DidanParams<T>& params, const Graph<T>& g,
                          const BatchForward<T>& fwd) {
  const T momentum = static_cast<T>(kBatchNormMomentum);
  const std::pair<NodeId, const char*> layers[] = {{fwd.disc.norm1, "bn.1."},
                                                   {fwd.disc.norm2, "bn.2."}};
  for (const auto& [node, prefix] : layers) {
    const BatchStats<T>& stats = g.batch_stats(node);
    Tensor<T>& mean = params.running.get(std::string(prefix) + "running_mean");
    Tensor<T>& var = params.running.get(std::string(prefix) + "running_var");
    const T unbias = static_cast<T>(stats.count) / static_cast<T>(stats.count - 1);
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] = (T{1} - momentum) * mean[c] + momentum * stats.mean[c];
      var[c] = (T{1} - momentum) * var[c] + momentum * stats.variance[c] * unbias;
    }
  }
}

template <typename T>
ForwardTrace<T> extract_trace(const Graph<T>& g, const BatchForward<T>& fwd,
                              std::size_t example) {
  ForwardTrace<T> trace;
  trace.article_rep = g.value(fwd.article_reps.at(example));
  const Tensor<T>& scores = g.value(fwd.disc.scores);
  const std::size_t offset = fwd.pair_offsets.at(example);
  const auto& pairs = fwd.pairs.at(example);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const PairNodes<T>& pn = pairs[k];
    PairTrace<T> pt;
    pt.pair_id = pn.pair_id;
    pt.indicator = pn.indicator;
    pt.fused = g.value(pn.fused);
    pt.score = static_cast<double>(scores[offset + k]);
    if (pn.attention) {
      const Tensor<T>& s = g.value(pn.attention->similarity);
      const Tensor<T>& a = g.value(pn.attention->attention);
      const std::size_t n_c = s.rows(), n_o = s.cols();
      pt.similarity = Tensor<T>({n_o, n_c});
      pt.attention = Tensor<T>({n_o, n_c});
      for (std::size_t l = 0; l < n_c; ++l) {
        for (std::size_t k2 = 0; k2 < n_o; ++k2) {
          pt.similarity(k2, l) = s(l, k2);
          pt.attention(k2, l) = a(l, k2);
        }
      }
      pt.word_reps = g.value(pn.attention->word_reps);
    }
    trace.pairs.push_back(std::move(pt));
  }
  trace.authenticity = static_cast<double>(g.value(fwd.authenticity.at(example))[0]);
  return trace;
}

template <typename T>
ForwardTrace<T> forward_article(
    const ArticleRecord& record, const DidanParams<T>& params,
    std::optional<std::span<const ImageCaptionPair>> substituted_pairs, Mode mode,
    const FusionOptions& fusion) {
  ExampleView ex;
  ex.article = &record;
  ex.pairs = substituted_pairs ? *substituted_pairs
                               : std::span<const ImageCaptionPair>(record.pairs);
  ex.label = label_value(record.label);
  Graph<T> g(&params.weights);
  BatchForward<T> fwd = forward_batch(g, params, std::span(&ex, 1), mode, fusion);
  return extract_trace(g, fwd, 0);
}

std::vector<double> predict_authenticity(const DidanParams<float>& params,
                                         std::span<const ArticleRecord> records,
                                         const FusionOptions& fusion,
                                         std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(records.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    std::vector<ExampleView> views;
    for (std::size_t i = start; i < end; ++i) {
      views.push_back({&records[i], records[i].pairs, label_value(records[i].label)});
    }
    Graph<float> g(&params.weights);
    BatchForward<float> fwd = forward_batch(g, params, views, Mode::kEval, fusion);
    for (NodeId a : fwd.authenticity) out.push_back(static_cast<double>(g.value(a)[0]));
  }
  return out;
}

NamedTensors params_to_named(const DidanParams<float>& params) {
  NamedTensors out;
  for (const auto& [name, t] : params.weights.entries()) out.emplace(name, t);
  for (const auto& [name, t] : params.running.entries()) out.emplace(name, t);
  return out;
}

DidanParams<float> params_from_named(const NamedTensors& named) {
  auto need = [&](const char* name) -> const FeatureTensor& {
    auto it = named.find(name);
    if (it == named.end()) {
      throw FormatError(std::string("checkpoint is missing model entry '") + name + "'");
    }
    if (it->second.rank() != 2) {
      throw FormatError(std::string("checkpoint entry '") + name + "' is not a matrix");
    }
    return it->second;
  };
  ModelDims dims;
  dims.d_text = need("w_art").dim(0);
  dims.d_vse = need("w_art").dim(1);
  dims.d_image = need("w_vis").dim(0);
  dims.hidden1 = need("fc1.weight").dim(1);
  dims.hidden2 = need("fc2.weight").dim(1);

  DidanParams<float> p = zero_params<float>(dims);
  for (auto* store : {&p.weights, &p.running}) {
    for (auto& [name, t] : store->entries()) {
      const FeatureTensor& src = need(name.c_str());
      if (src.shape() != t.shape()) {
        throw FormatError("checkpoint entry '" + name + "' has shape " +
                          shape_to_string(src.shape()) + ", expected " +
                          shape_to_string(t.shape()));
      }
      t = src;
    }
  }
  return p;
}

void fusion_to_named(const FusionOptions& fusion, NamedTensors& named) {
  named["meta.fusion"] = FeatureTensor(
      {2}, {static_cast<float>(fusion.modality), fusion.use_nei ? 1.0f : 0.0f});
}

FusionOptions fusion_from_named(const NamedTensors& named) {
  FusionOptions f;
  auto it = named.find("meta.fusion");
  if (it == named.end()) return f;
  if (it->second.size() != 2) throw FormatError("checkpoint 'meta.fusion' malformed");
  const int code = static_cast<int>(it->second[0]);
  if (code < 0 || code > 3) throw FormatError("checkpoint 'meta.fusion' has bad modality");
  f.modality = static_cast<ModalityAblation>(code);
  f.use_nei = it->second[1] != 0.0f;
  return f;
}

#define DIDAN_INSTANTIATE_MODEL(T)                                                  \
  template DidanParams<T> init_params<T>(const ModelDims&, std::mt19937_64&);       \
  template DidanParams<T> zero_params<T>(const ModelDims&);                         \
  template NodeId encode_article<T>(Graph<T>&, const DidanParams<T>&,               \
                                    const ArticleRecord&);                          \
  template PairAttention<T> attend_pair<T>(Graph<T>&, const DidanParams<T>&,        \
                                           const ImageCaptionPair&);                \
  template NodeId fuse_pair<T>(Graph<T>&, const DidanParams<T>&, NodeId,            \
                               const ImageCaptionPair&, double,                     \
                               const FusionOptions&, PairAttention<T>*);            \
  template DiscriminatorNodes discriminate<T>(Graph<T>&, const DidanParams<T>&,     \
                                              NodeId, Mode);                        \
  template NodeId score_pair<T>(Graph<T>&, const DidanParams<T>&, NodeId,           \
                                const ImageCaptionPair&, double,                    \
                                const FusionOptions&);                              \
  template NodeId bce_loss<T>(Graph<T>&, NodeId, double);                           \
  template BatchForward<T> forward_batch<T>(Graph<T>&, const DidanParams<T>&,       \
                                            std::span<const ExampleView>, Mode,     \
                                            const FusionOptions&);                  \
  template NodeId batch_loss<T>(Graph<T>&, const BatchForward<T>&,                  \
                                std::span<const ExampleView>);                      \
  template void update_running_stats<T>(DidanParams<T>&, const Graph<T>&,           \
                                        const BatchForward<T>&);                    \
  template ForwardTrace<T> extract_trace<T>(const Graph<T>&, const BatchForward<T>&, \
                                            std::size_t);                           \
  template ForwardTrace<T> forward_article<T>(                                      \
      const ArticleRecord&, const DidanParams<T>&,                                  \
      std::optional<std::span<const ImageCaptionPair>>, Mode, const FusionOptions&);

DIDAN_INSTANTIATE_MODEL(float)
DIDAN_INSTANTIATE_MODEL(double)

#undef DIDAN_INSTANTIATE_MODEL

}  // namespace didan
