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

#ifndef DIDAN_CCA_H_
#define DIDAN_CCA_H_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "didan/binary_io.h"
#include "didan/record.h"

namespace didan {

// Canonical correlation baseline between the article view and the
// concatenated [image | caption] view, on raw (unprojected) features.
struct CcaModel {
  Eigen::MatrixXd u;       // [d_a x r], whitens the article view
  Eigen::MatrixXd v;       // [d_b x r], whitens the pair view
  Eigen::VectorXd mean_a;  // [d_a]
  Eigen::VectorXd mean_b;  // [d_b]
  Eigen::VectorXd rho;     // [r], descending, each in [0, 1]
  double threshold = 0.0;  // REAL iff score >= threshold

  std::size_t components() const { return static_cast<std::size_t>(rho.size()); }
};

inline constexpr std::size_t kCcaDefaultComponents = 64;
inline constexpr double kCcaDefaultRidge = 1e-3;

// One row per image-caption pair: a = two-level mean of the body word
// vectors (repeated for every pair), b = [mean object | mean caption word].
struct CcaViews {
  Eigen::MatrixXd a;  // [n_pairs x d_text]
  Eigen::MatrixXd b;  // [n_pairs x (d_image + d_text)]
};

CcaViews build_views(const ArticleRecord& record);
// Stacks the views of every record; with `real_only` generated ones are skipped.
CcaViews build_views(std::span<const ArticleRecord> records, bool real_only);

// Regularized CCA: covariances get ridge * I, each view is whitened through
// its inverse square root and the whitened cross-covariance is decomposed by
// SVD. Keeps min(r, d_a, d_b) components. Throws std::invalid_argument on
// too few samples or a covariance that stays singular after the ridge.
CcaModel fit_cca(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t r,
                 double ridge);

// Correlation-weighted cosine of the centered projections:
//   sum_j rho_j x_j y_j / sqrt(sum_j rho_j x_j^2 * sum_j rho_j y_j^2),
// x = U^T (a - mean_a), y = V^T (b - mean_b). An all-zero view carries no
// evidence and scores 0, as does a vanishing denominator.
double cca_pair_score(const CcaModel& model, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b);
// Mean pair score of a record.
double cca_score(const CcaModel& model, const ArticleRecord& record);
std::vector<double> cca_scores(const CcaModel& model, std::span<const ArticleRecord> records);

struct Calibration {
  double threshold = 0.0;
  double accuracy = 0.0;
};

// Threshold maximizing accuracy of "REAL iff score >= threshold". Candidates
// sit below the minimum, between consecutive distinct scores and above the
// maximum; the midpoint of the first run of optimal candidates wins. Throws
// std::invalid_argument when only one class is present.
Calibration calibrate_threshold(std::span<const double> scores, std::span<const Label> labels);
Calibration calibrate_threshold(CcaModel& model, std::span<const ArticleRecord> validation);

// Checkpoint mapping under the reserved "cca." prefix.
NamedTensors cca_to_named(const CcaModel& model);
CcaModel cca_from_named(const NamedTensors& named);

}  // namespace didan

#endif  // DIDAN_CCA_H_
