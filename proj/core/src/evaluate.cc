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

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace didan {
namespace {

std::vector<Label> labels_of(std::span<const ArticleRecord> records) {
  std::vector<Label> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  return labels;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

EvalReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                           double threshold) {
  if (scores.empty()) throw std::invalid_argument("evaluate: no records to score");
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("evaluate: scores and labels differ in length");
  }
  EvalReport r;
  r.n = scores.size();
  r.threshold = threshold;
  double sum_real = 0.0, sum_generated = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool says_real = scores[i] >= threshold;
    if (labels[i] == Label::kReal) {
      sum_real += scores[i];
      ++(says_real ? r.real_as_real : r.real_as_generated);
    } else {
      sum_generated += scores[i];
      ++(says_real ? r.generated_as_real : r.generated_as_generated);
    }
  }
  const std::size_t n_real = r.real_as_real + r.real_as_generated;
  const std::size_t n_generated = r.generated_as_real + r.generated_as_generated;
  r.accuracy = ratio(r.real_as_real + r.generated_as_generated, r.n);
  r.accuracy_real = ratio(r.real_as_real, n_real);
  r.accuracy_generated = ratio(r.generated_as_generated, n_generated);
  r.mean_score_real = n_real ? sum_real / static_cast<double>(n_real)
                             : std::numeric_limits<double>::quiet_NaN();
  r.mean_score_generated = n_generated ? sum_generated / static_cast<double>(n_generated)
                                       : std::numeric_limits<double>::quiet_NaN();
  return r;
}

EvalReport evaluate_accuracy(const DidanParams<float>& params,
                             std::span<const ArticleRecord> records, const FusionOptions& fusion) {
  if (records.empty()) throw std::invalid_argument("evaluate: no records to score");
  const std::vector<double> scores = predict_authenticity(params, records, fusion);
  const std::vector<Label> labels = labels_of(records);
  return evaluate_scores(scores, labels, kDecisionThreshold);
}

EvalReport evaluate_accuracy(const CcaModel& model, std::span<const ArticleRecord> records) {
  if (records.empty()) throw std::invalid_argument("evaluate: no records to score");
  const std::vector<double> scores = cca_scores(model, records);
  const std::vector<Label> labels = labels_of(records);
  return evaluate_scores(scores, labels, model.threshold);
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  j["accuracy"] = r.accuracy;
  j["accuracy_real"] = number_or_null(r.accuracy_real);
  j["accuracy_generated"] = number_or_null(r.accuracy_generated);
  j["counts"] = {{"real_as_real", r.real_as_real},
                 {"real_as_generated", r.real_as_generated},
                 {"generated_as_real", r.generated_as_real},
                 {"generated_as_generated", r.generated_as_generated}};
  j["mean_score_real"] = number_or_null(r.mean_score_real);
  j["mean_score_generated"] = number_or_null(r.mean_score_generated);
  return j.dump();
}

}  // namespace didan
