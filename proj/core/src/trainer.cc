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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "didan/binary_io.h"
#include "didan/errors.h"
#include "json.hpp"

namespace didan {
namespace {

double clamped_bce(double p, double y) {
  const double pc = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return -(y * std::log(pc) + (1.0 - y) * std::log1p(-pc));
}

bool predicts_real(double p) { return p >= kDecisionThreshold; }

std::string epoch_file(std::size_t epoch) {
  std::ostringstream s;
  s << "epoch_" << std::setw(3) << std::setfill('0') << epoch << ".ddn";
  return s.str();
}

// Groups shuffled pool indices into batches; a trailing singleton joins the
// previous batch because train-mode batch norm needs at least two rows.
std::vector<std::vector<const ArticleRecord*>> make_batches(
    const std::vector<const ArticleRecord*>& pool, std::size_t batch_size,
    std::mt19937_64& rng) {
  std::vector<const ArticleRecord*> order = pool;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<const ArticleRecord*>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

void put_step(NamedTensors& named, std::uint64_t step) {
  // Two 24-bit halves keep the count exact in f32.
  const float lo = static_cast<float>(step & 0xFFFFFF);
  const float hi = static_cast<float>((step >> 24) & 0xFFFFFF);
  named["adam.step"] = FeatureTensor({2}, {lo, hi});
}

}  // namespace

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) fail("lr must be finite and >= 0");
  if (c.batch_size < 2) fail("batch_size must be at least 2");
  if (c.epochs == 0) fail("epochs must be positive");
  if (!(c.generated_fraction >= 0.0 && c.generated_fraction <= 1.0)) {
    fail("generated_fraction must lie in [0, 1]");
  }
  if (c.d_vse == 0 || c.hidden1 == 0 || c.hidden2 == 0) fail("layer widths must be positive");
}

WarningSink stderr_warnings() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

std::vector<TrainExample> sample_mismatch_negatives(
    std::span<const ArticleRecord* const> batch, std::size_t k, std::mt19937_64& rng) {
  std::vector<TrainExample> out;
  if (k == 0) return out;
  if (batch.size() < 2) {
    throw std::invalid_argument(
        "sample_mismatch_negatives: need at least 2 articles in the batch for k >= 1");
  }
  std::uniform_int_distribution<std::size_t> pick(0, batch.size() - 2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->label != Label::kReal) continue;
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t donor = pick(rng);
      if (donor >= i) ++donor;  // skip self, uniform over the others
      out.push_back({batch[i], batch[donor], 0.0});
    }
  }
  return out;
}

std::vector<TrainExample> build_batch(std::span<const ArticleRecord* const> batch,
                                      const TrainConfig& config, std::mt19937_64& rng,
                                      const WarningSink& warn) {
  if (batch.empty()) throw std::invalid_argument("build_batch: empty batch");
  std::vector<TrainExample> out;
  out.reserve(batch.size() * 2);
  for (const ArticleRecord* r : batch) {
    out.push_back({r, nullptr, label_value(r->label)});
  }
  if (config.use_mismatch && config.negatives_per_positive > 0) {
    auto neg = sample_mismatch_negatives(batch, config.negatives_per_positive, rng);
    out.insert(out.end(), neg.begin(), neg.end());
  }
  const bool has_negative =
      std::any_of(out.begin(), out.end(), [](const TrainExample& e) { return e.label == 0.0; });
  if (!has_negative && warn) {
    warn("batch has only positive examples (no generated articles and no mismatch "
         "negatives); the loss carries no signal to separate classes");
  }
  return out;
}

std::vector<const ArticleRecord*> select_training_pool(std::span<const ArticleRecord> records,
                                                       double generated_fraction,
                                                       std::mt19937_64& rng) {
  std::vector<const ArticleRecord*> real, generated;
  for (const auto& r : records) {
    (r.label == Label::kReal ? real : generated).push_back(&r);
  }
  std::size_t n_real = real.size(), n_gen = 0;
  if (generated_fraction >= 1.0) {
    n_real = 0;
    n_gen = generated.size();
  } else if (generated_fraction > 0.0) {
    const double ratio = generated_fraction / (1.0 - generated_fraction);
    n_gen = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(real.size())));
    if (n_gen > generated.size()) {
      n_gen = generated.size();
      n_real = std::min(real.size(), static_cast<std::size_t>(std::llround(
                                         static_cast<double>(n_gen) / ratio)));
    }
  }
  std::shuffle(real.begin(), real.end(), rng);
  std::shuffle(generated.begin(), generated.end(), rng);
  std::vector<const ArticleRecord*> pool(real.begin(),
                                         real.begin() + static_cast<std::ptrdiff_t>(n_real));
  pool.insert(pool.end(), generated.begin(),
              generated.begin() + static_cast<std::ptrdiff_t>(n_gen));
  return pool;
}

std::string metrics_to_json(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},
                      {"split", m.split},
                      {"loss", m.loss},
                      {"accuracy", m.accuracy},
                      {"examples", m.examples}};
  return j.dump();
}

NamedTensors checkpoint_entries(const DidanParams<float>& params,
                                const AdamState<float>* adam, const FusionOptions& fusion) {
  NamedTensors named = params_to_named(params);
  fusion_to_named(fusion, named);
  if (adam != nullptr) {
    for (const auto& [name, t] : adam->first_moment.entries()) named["adam.m." + name] = t;
    for (const auto& [name, t] : adam->second_moment.entries()) named["adam.v." + name] = t;
    put_step(named, adam->step);
    named["adam.hyper"] = FeatureTensor(
        {4}, {static_cast<float>(adam->hyper.lr), static_cast<float>(adam->hyper.beta1),
              static_cast<float>(adam->hyper.beta2), static_cast<float>(adam->hyper.eps)});
  }
  return named;
}

AdamState<float> adam_from_named(const NamedTensors& named) {
  AdamState<float> s;
  for (const auto& [name, t] : named) {
    if (name.rfind("adam.m.", 0) == 0) s.first_moment.set(name.substr(7), t);
    if (name.rfind("adam.v.", 0) == 0) s.second_moment.set(name.substr(7), t);
  }
  if (auto it = named.find("adam.step"); it != named.end()) {
    if (it->second.size() != 2) throw FormatError("checkpoint 'adam.step' malformed");
    s.step = static_cast<std::uint64_t>(it->second[0]) |
             (static_cast<std::uint64_t>(it->second[1]) << 24);
  }
  if (auto it = named.find("adam.hyper"); it != named.end()) {
    if (it->second.size() != 4) throw FormatError("checkpoint 'adam.hyper' malformed");
    s.hyper = {it->second[0], it->second[1], it->second[2], it->second[3]};
  }
  return s;
}

TrainResult train(std::span<const ArticleRecord> train_records,
                  std::span<const ArticleRecord> val_records, const TrainConfig& config,
                  const TrainOptions& options) {
  validate(config);
  if (train_records.empty()) throw std::invalid_argument("train: no training records");

  const FusionOptions fusion = config.fusion();
  ModelDims dims;
  dims.d_text = train_records.front().sentences.front().cols();
  dims.d_image = train_records.front().pairs.front().object_feats.cols();
  dims.d_vse = config.d_vse;
  dims.hidden1 = config.hidden1;
  dims.hidden2 = config.hidden2;

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.params = init_params<float>(dims, rng);
  result.adam.hyper.lr = config.lr;

  const std::vector<const ArticleRecord*> pool =
      select_training_pool(train_records, config.generated_fraction, rng);
  for (const ArticleRecord* r : pool) {
    (r->label == Label::kReal ? result.pool_real : result.pool_generated) += 1;
  }
  if (pool.size() < 2) {
    throw std::invalid_argument("train: fewer than 2 articles left after applying "
                                "generated_fraction");
  }

  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);
  std::ostringstream metrics_log;
  auto emit = [&](const EpochMetrics& m) {
    result.metrics.push_back(m);
    metrics_log << metrics_to_json(m) << '\n';
    if (options.on_metrics) options.on_metrics(m);
  };

  double best_accuracy = -1.0;
  result.best = result.params;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_total = 0.0;
    std::size_t correct = 0, seen = 0;
    const auto batches = make_batches(pool, config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const std::vector<TrainExample> examples =
          build_batch(batches[b], config, rng, epoch == 1 && b == 0 ? options.warn : WarningSink{});
      std::vector<ExampleView> views;
      views.reserve(examples.size());
      for (const auto& e : examples) views.push_back(e.view());

      Graph<float> g(&result.params.weights);
      BatchForward<float> fwd = forward_batch(g, result.params, views, Mode::kTrain, fusion);
      const NodeId loss = batch_loss(g, fwd, views);
      const double loss_value = g.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        std::string ids;
        for (std::size_t i = 0; i < batches[b].size() && i < 4; ++i) {
          ids += (i ? ", " : "") + batches[b][i]->article_id;
        }
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(b) + " (articles " + ids + ", ...)");
      }
      loss_total += loss_value;
      for (std::size_t i = 0; i < views.size(); ++i) {
        const double p = g.value(fwd.authenticity[i])[0];
        if (predicts_real(p) == (views[i].label == 1.0)) ++correct;
      }
      seen += views.size();

      const Gradients<float> grads = g.backward(loss);
      update_running_stats(result.params, g, fwd);
      adam_step(result.params.weights, grads.params, result.adam);
    }
    emit({epoch, "train", loss_total / static_cast<double>(seen),
          static_cast<double>(correct) / static_cast<double>(seen), seen});

    if (!val_records.empty()) {
      const std::vector<double> scores =
          predict_authenticity(result.params, val_records, fusion);
      double vloss = 0.0;
      std::size_t vcorrect = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const double y = label_value(val_records[i].label);
        vloss += clamped_bce(scores[i], y);
        if (predicts_real(scores[i]) == (y == 1.0)) ++vcorrect;
      }
      const double vacc = static_cast<double>(vcorrect) / static_cast<double>(scores.size());
      emit({epoch, "val", vloss / static_cast<double>(scores.size()), vacc, scores.size()});
      if (vacc > best_accuracy) {
        best_accuracy = vacc;
        result.best = result.params;
        result.best_epoch = epoch;
        if (options.out_dir) {
          write_checkpoint(checkpoint_entries(result.params, &result.adam, fusion),
                           *options.out_dir / "best.ddn");
        }
      }
    }
    if (options.out_dir) {
      write_checkpoint(checkpoint_entries(result.params, &result.adam, fusion),
                       *options.out_dir / epoch_file(epoch));
    }
  }
  if (val_records.empty()) {
    result.best = result.params;
    result.best_epoch = config.epochs;
  }
  if (options.out_dir) {
    write_checkpoint(checkpoint_entries(result.params, &result.adam, fusion),
                     *options.out_dir / "model.ddn");
    write_file_bytes(*options.out_dir / "metrics.jsonl", metrics_log.str());
  }
  return result;
}

}  // namespace didan
