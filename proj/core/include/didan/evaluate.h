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

#ifndef DIDAN_EVALUATE_H_
#define DIDAN_EVALUATE_H_

#include <span>
#include <string>

#include "didan/cca.h"
#include "didan/model.h"
#include "didan/record.h"

namespace didan {

struct EvalReport {
  std::size_t n = 0;
  double threshold = kDecisionThreshold;
  double accuracy = 0.0;
  // NaN when the class is absent.
  double accuracy_real = 0.0;
  double accuracy_generated = 0.0;
  // Counts by true class and predicted class.
  std::size_t real_as_real = 0;
  std::size_t real_as_generated = 0;
  std::size_t generated_as_real = 0;
  std::size_t generated_as_generated = 0;
  double mean_score_real = 0.0;
  double mean_score_generated = 0.0;
};

// Predicts REAL iff score >= threshold. Throws std::invalid_argument on
// empty input or mismatched lengths.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                           double threshold);

// Eval-mode DIDAN at threshold 0.5 on the authenticity score.
EvalReport evaluate_accuracy(const DidanParams<float>& params,
                             std::span<const ArticleRecord> records, const FusionOptions& fusion);

// CCA score at the model's calibrated threshold.
EvalReport evaluate_accuracy(const CcaModel& model, std::span<const ArticleRecord> records);

// Single-line JSON object; NaN per-class accuracies become null.
std::string to_json(const EvalReport& report);

}  // namespace didan

#endif  // DIDAN_EVALUATE_H_
