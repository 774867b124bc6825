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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "didan/binary_io.h"

namespace didan {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::uint64_t kOracleStream = 0x9E3779B97F4A7C15ULL;

struct MixingMaps {
  MatrixXd text;   // [d_text x k]
  MatrixXd image;  // [d_image x k]
};

MixingMaps draw_maps(const SynthConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(c.latent_dim)));
  MixingMaps m{MatrixXd(c.d_text, c.latent_dim), MatrixXd(c.d_image, c.latent_dim)};
  for (Eigen::Index i = 0; i < m.text.size(); ++i) m.text.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < m.image.size(); ++i) m.image.data()[i] = n(rng);
  return m;
}

struct SampledPair {
  MatrixXd caption;  // [n_c x d_text]
  MatrixXd objects;  // [n_o x d_image]
  std::vector<std::string> entities;
  bool overlaps = false;
};

struct SampledArticle {
  Label label = Label::kReal;
  std::vector<MatrixXd> sentences;
  std::vector<std::string> body_entities;
  std::vector<SampledPair> pairs;
  bool images_missing = false;
};

std::string entity_name(std::size_t topic, std::size_t index) {
  std::ostringstream s;
  s << "topic" << topic << " entity" << index;
  return s.str();
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

MatrixXd noisy_rows(std::size_t rows, const VectorXd& mean, double noise,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd out(rows, mean.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      out(static_cast<Eigen::Index>(r), j) = mean(j) + noise * n(rng);
    }
  }
  return out;
}

VectorXd latent(std::size_t k, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  VectorXd z(k);
  for (std::size_t i = 0; i < k; ++i) z(static_cast<Eigen::Index>(i)) = n(rng);
  return z;
}

SampledArticle sample_article(const SynthConfig& c, const MixingMaps& maps, Label label,
                              std::mt19937_64& rng) {
  SampledArticle a;
  a.label = label;
  const std::size_t topic = uniform_index(rng, 0, c.n_topics - 1);
  std::vector<std::size_t> pool(c.entity_pool_size);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < c.body_entities; ++i) {
    a.body_entities.push_back(entity_name(topic, pool[i]));
  }

  const VectorXd z_body = latent(c.latent_dim, rng);
  const VectorXd z = label == Label::kReal ? z_body : latent(c.latent_dim, rng);
  a.images_missing = std::bernoulli_distribution(c.missing_image_prob)(rng);
  const VectorXd word_mean = maps.text * z_body;
  const std::size_t n_sent = uniform_index(rng, c.min_sentences, c.max_sentences);
  for (std::size_t s = 0; s < n_sent; ++s) {
    a.sentences.push_back(
        noisy_rows(uniform_index(rng, c.min_words, c.max_words), word_mean, c.sigma, rng));
  }

  std::discrete_distribution<std::size_t> count(c.pair_count_probs.begin(),
                                                c.pair_count_probs.end());
  const std::size_t n_pairs = count(rng) + 1;
  const double q = label == Label::kReal ? c.q_match : c.q_mismatch;
  const VectorXd caption_mean = c.caption_signal * (maps.text * z);
  const VectorXd object_mean = c.image_signal * (maps.image * z);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    SampledPair pair;
    pair.caption = noisy_rows(uniform_index(rng, c.min_caption_words, c.max_caption_words),
                              caption_mean, c.sigma * c.caption_noise_scale, rng);
    pair.objects = noisy_rows(uniform_index(rng, c.min_objects, c.max_objects), object_mean,
                              c.sigma * c.image_noise_scale, rng);
    if (a.images_missing) pair.objects.setZero();
    pair.overlaps = std::bernoulli_distribution(q)(rng);
    if (pair.overlaps) {
      pair.entities.push_back(a.body_entities[uniform_index(rng, 0, c.body_entities - 1)]);
    } else {
      std::size_t other = uniform_index(rng, 0, c.n_topics - 2);
      if (other >= topic) ++other;
      pair.entities.push_back(entity_name(other, uniform_index(rng, 0, c.entity_pool_size - 1)));
    }
    a.pairs.push_back(std::move(pair));
  }
  return a;
}

FeatureTensor to_tensor(const MatrixXd& m) {
  FeatureTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      t(static_cast<std::size_t>(r), static_cast<std::size_t>(j)) = static_cast<float>(m(r, j));
    }
  }
  return t;
}

ArticleRecord to_record(const SampledArticle& a, const std::string& id) {
  ArticleRecord r;
  r.article_id = id;
  r.label = a.label;
  r.body_entities = EntitySet::from_normalized(a.body_entities);
  for (const auto& s : a.sentences) r.sentences.push_back(to_tensor(s));
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    ImageCaptionPair pair;
    pair.pair_id = id + "_p" + std::to_string(p);
    pair.caption_words = to_tensor(a.pairs[p].caption);
    pair.object_feats = to_tensor(a.pairs[p].objects);
    pair.caption_entities = EntitySet::from_normalized(a.pairs[p].entities);
    r.pairs.push_back(std::move(pair));
  }
  return r;
}

// Observed means stacked block by block, with the loading of each block on
// the shared latent and its per-coordinate noise variance.
struct LinearGaussian {
  std::vector<VectorXd> values;
  std::vector<MatrixXd> loadings;
  std::vector<double> variances;

  void add(const VectorXd& v, MatrixXd loading, double variance) {
    values.push_back(v);
    loadings.push_back(std::move(loading));
    variances.push_back(variance);
  }
};

// log N(x; 0, D + B B^T) through the k x k capacitance matrix.
double log_marginal(const LinearGaussian& m, Eigen::Index k) {
  MatrixXd capacitance = MatrixXd::Identity(k, k);
  VectorXd projected = VectorXd::Zero(k);
  double quad = 0.0, log_det = 0.0, dims = 0.0;
  for (std::size_t b = 0; b < m.values.size(); ++b) {
    const double inv = 1.0 / m.variances[b];
    const auto n = static_cast<double>(m.values[b].size());
    capacitance += inv * m.loadings[b].transpose() * m.loadings[b];
    projected += inv * m.loadings[b].transpose() * m.values[b];
    quad += inv * m.values[b].squaredNorm();
    log_det += n * std::log(m.variances[b]);
    dims += n;
  }
  const Eigen::LLT<MatrixXd> llt(capacitance);
  quad -= projected.dot(llt.solve(projected));
  log_det += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (quad + log_det + dims * std::log(2.0 * std::numbers::pi));
}

double bernoulli_llr(bool observed, double q_real, double q_generated) {
  const double num = observed ? q_real : 1.0 - q_real;
  const double den = observed ? q_generated : 1.0 - q_generated;
  return std::log(num) - std::log(den);
}

// log p(x | real) - log p(x | generated) with the latent marginalized. Only
// block means matter: deviations from them are identically distributed under
// both labels, and missing images carry no evidence either way.
double oracle_llr(const SynthConfig& c, const MixingMaps& maps, const SampledArticle& a) {
  const auto k = static_cast<Eigen::Index>(c.latent_dim);
  VectorXd body = VectorXd::Zero(static_cast<Eigen::Index>(c.d_text));
  double n_words = 0.0;
  for (const auto& s : a.sentences) {
    body += s.colwise().sum().transpose();
    n_words += static_cast<double>(s.rows());
  }
  body /= n_words;

  const double var_t = c.sigma * c.sigma;
  const double var_c = var_t * c.caption_noise_scale * c.caption_noise_scale;
  const double var_o = var_t * c.image_noise_scale * c.image_noise_scale;
  LinearGaussian pairs;
  double entity = 0.0;
  for (const auto& p : a.pairs) {
    pairs.add(p.caption.colwise().mean().transpose(), c.caption_signal * maps.text,
              var_c / static_cast<double>(p.caption.rows()));
    if (!a.images_missing) {
      pairs.add(p.objects.colwise().mean().transpose(), c.image_signal * maps.image,
                var_o / static_cast<double>(p.objects.rows()));
    }
    entity += bernoulli_llr(p.overlaps, c.q_match, c.q_mismatch);
  }
  LinearGaussian body_only;
  body_only.add(body, maps.text, var_t / n_words);
  LinearGaussian joint = body_only;
  for (std::size_t b = 0; b < pairs.values.size(); ++b) {
    joint.add(pairs.values[b], pairs.loadings[b], pairs.variances[b]);
  }
  const double real = log_marginal(joint, k);
  const double generated = log_marginal(body_only, k) + log_marginal(pairs, k);
  return real - generated + entity;
}

std::string article_id(std::size_t index) {
  std::ostringstream s;
  s << "syn" << std::setw(5) << std::setfill('0') << index;
  return s.str();
}

}  // namespace

void validate(const SynthConfig& c, bool allow_equal_q) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("synth config: " + m); };
  if (c.n_articles < 2) fail("n_articles must be at least 2");
  if (c.d_text == 0 || c.d_image == 0 || c.latent_dim == 0) fail("dimensions must be positive");
  if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) fail("sigma must be positive and finite");
  if (!(c.caption_noise_scale > 0.0) || !(c.image_noise_scale > 0.0)) {
    fail("noise scales must be positive");
  }
  if (!(c.missing_image_prob >= 0.0 && c.missing_image_prob <= 1.0)) {
    fail("missing_image_prob must lie in [0, 1]");
  }
  if (!std::isfinite(c.caption_signal) || !std::isfinite(c.image_signal)) {
    fail("signal scales must be finite");
  }
  if (c.n_topics < 2) fail("n_topics must be at least 2");
  if (c.entity_pool_size == 0 || c.body_entities == 0 || c.body_entities > c.entity_pool_size) {
    fail("body_entities must lie in [1, entity_pool_size]");
  }
  const bool q_ok = allow_equal_q ? c.q_mismatch <= c.q_match : c.q_mismatch < c.q_match;
  if (!(c.q_mismatch >= 0.0 && c.q_match <= 1.0 && q_ok)) {
    fail("need 0 <= q_mismatch < q_match <= 1");
  }
  double total = 0.0;
  for (double p : c.pair_count_probs) {
    if (!(p >= 0.0)) fail("pair_count_probs must be non-negative");
    total += p;
  }
  if (!(total > 0.0)) fail("pair_count_probs must not all be zero");
  auto range = [&](std::size_t lo, std::size_t hi, const char* what) {
    if (lo == 0 || lo > hi) fail(std::string(what) + " range must satisfy 1 <= min <= max");
  };
  range(c.min_sentences, c.max_sentences, "sentence");
  range(c.min_words, c.max_words, "word");
  range(c.min_caption_words, c.max_caption_words, "caption word");
  range(c.min_objects, c.max_objects, "object");
  double split = 0.0;
  for (double f : c.split_fractions) {
    if (!(f >= 0.0)) fail("split_fractions must be non-negative");
    split += f;
  }
  if (std::abs(split - 1.0) > 1e-9) fail("split_fractions must sum to 1");
}

SynthSplits generate_records(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  const MixingMaps maps = draw_maps(config, rng);
  const std::size_t n = config.n_articles;
  const auto n_train = static_cast<std::size_t>(
      std::llround(config.split_fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(
                                               config.split_fractions[1] * static_cast<double>(n))));
  SynthSplits out;
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i % 2 == 0 ? Label::kReal : Label::kGenerated;
    ArticleRecord r = to_record(sample_article(config, maps, label, rng), article_id(i));
    auto& split = i < n_train ? out.train : i < n_train + n_val ? out.val : out.test;
    split.push_back(std::move(r));
  }
  return out;
}

SynthDataset generate_synthetic_dataset(const SynthConfig& config,
                                        const std::filesystem::path& out_dir) {
  SynthDataset ds;
  ds.splits = generate_records(config);
  std::filesystem::create_directories(out_dir / "blobs");

  auto emit = [&](const std::vector<ArticleRecord>& records, const std::string& split) {
    Manifest m;
    m.d_text = config.d_text;
    m.d_image = config.d_image;
    m.split = split;
    m.base_dir = out_dir;
    for (const auto& r : records) {
      RecordEntry e;
      e.article_id = r.article_id;
      e.label = r.label;
      e.body_entities = r.body_entities.items();
      for (std::size_t s = 0; s < r.sentences.size(); ++s) {
        const std::filesystem::path rel =
            std::filesystem::path("blobs") / (r.article_id + "_s" + std::to_string(s) + ".dff");
        write_feature_blob(r.sentences[s], out_dir / rel);
        e.sentence_blobs.push_back(rel);
      }
      for (const auto& p : r.pairs) {
        PairEntry pe;
        pe.pair_id = p.pair_id;
        pe.caption_blob = std::filesystem::path("blobs") / (p.pair_id + "_cap.dff");
        pe.objects_blob = std::filesystem::path("blobs") / (p.pair_id + "_obj.dff");
        write_feature_blob(p.caption_words, out_dir / pe.caption_blob);
        write_feature_blob(p.object_feats, out_dir / pe.objects_blob);
        pe.caption_entities = p.caption_entities.items();
        e.pairs.push_back(std::move(pe));
      }
      m.records.push_back(std::move(e));
    }
    const std::filesystem::path path = out_dir / (split + ".jsonl");
    write_manifest(m, path);
    return path;
  };
  ds.train_manifest = emit(ds.splits.train, "train");
  ds.val_manifest = emit(ds.splits.val, "val");
  ds.test_manifest = emit(ds.splits.test, "test");
  return ds;
}

double bayes_oracle_accuracy(const SynthConfig& config, std::size_t n_mc) {
  validate(config, /*allow_equal_q=*/true);
  if (n_mc == 0) throw std::invalid_argument("bayes_oracle_accuracy: n_mc must be positive");
  std::mt19937_64 map_rng(config.seed);
  const MixingMaps maps = draw_maps(config, map_rng);
  std::mt19937_64 rng(config.seed ^ kOracleStream);
  double correct = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const Label label = i % 2 == 0 ? Label::kReal : Label::kGenerated;
    const SampledArticle a = sample_article(config, maps, label, rng);
    const double llr = oracle_llr(config, maps, a);
    // Conflicting certain evidence (inf - inf) counts as a tie.
    const bool says_real = std::isnan(llr) || llr >= 0.0;
    if (says_real == (label == Label::kReal)) correct += 1.0;
  }
  return correct / static_cast<double>(n_mc);
}

}  // namespace didan
