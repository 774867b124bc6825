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

#include "didan/cca.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "didan/errors.h"

namespace didan {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd row_mean(const FeatureTensor& t) {
  VectorXd m = VectorXd::Zero(static_cast<Eigen::Index>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(static_cast<Eigen::Index>(c)) += t(r, c);
  }
  return m / static_cast<double>(t.rows());
}

// Inverse square root of a symmetric positive definite matrix.
MatrixXd inverse_sqrt(const MatrixXd& s, const char* view) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  const VectorXd& values = eig.eigenvalues();
  const double top = std::max(values.maxCoeff(), 0.0);
  if (!(values.minCoeff() > 1e-12 * std::max(top, 1.0))) {
    throw std::invalid_argument(std::string("fit_cca: covariance of view ") + view +
                                " is singular; raise the ridge or add samples");
  }
  return eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

FeatureTensor to_tensor(const MatrixXd& m) {
  FeatureTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(m(r, c));
    }
  }
  return t;
}

FeatureTensor to_tensor(const VectorXd& v) {
  FeatureTensor t({static_cast<std::size_t>(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i) t[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  return t;
}

MatrixXd matrix_entry(const NamedTensors& named, const std::string& name) {
  auto it = named.find(name);
  if (it == named.end()) throw FormatError("checkpoint lacks '" + name + "'");
  const FeatureTensor& t = it->second;
  if (t.rank() != 2) throw FormatError("checkpoint entry '" + name + "' must be rank 2");
  MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t(r, c);
    }
  }
  return m;
}

VectorXd vector_entry(const NamedTensors& named, const std::string& name) {
  auto it = named.find(name);
  if (it == named.end()) throw FormatError("checkpoint lacks '" + name + "'");
  const FeatureTensor& t = it->second;
  if (t.rank() != 1) throw FormatError("checkpoint entry '" + name + "' must be rank 1");
  VectorXd v(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) v(static_cast<Eigen::Index>(i)) = t[i];
  return v;
}

}  // namespace

CcaViews build_views(const ArticleRecord& record) {
  if (record.sentences.empty() || record.pairs.empty()) {
    throw std::invalid_argument("build_views: record '" + record.article_id +
                                "' needs sentences and pairs");
  }
  VectorXd article = VectorXd::Zero(static_cast<Eigen::Index>(record.sentences.front().cols()));
  for (const auto& s : record.sentences) article += row_mean(s);
  article /= static_cast<double>(record.sentences.size());

  const auto d_text = article.size();
  const auto d_image = static_cast<Eigen::Index>(record.pairs.front().object_feats.cols());
  const auto n = static_cast<Eigen::Index>(record.pairs.size());
  CcaViews v{MatrixXd(n, d_text), MatrixXd(n, d_image + d_text)};
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto& pair = record.pairs[static_cast<std::size_t>(p)];
    v.a.row(p) = article.transpose();
    v.b.row(p) << row_mean(pair.object_feats).transpose(), row_mean(pair.caption_words).transpose();
  }
  return v;
}

CcaViews build_views(std::span<const ArticleRecord> records, bool real_only) {
  std::vector<CcaViews> parts;
  Eigen::Index rows = 0;
  for (const auto& r : records) {
    if (real_only && r.label != Label::kReal) continue;
    parts.push_back(build_views(r));
    rows += parts.back().a.rows();
  }
  if (parts.empty()) throw std::invalid_argument("build_views: no records selected");
  CcaViews out{MatrixXd(rows, parts.front().a.cols()), MatrixXd(rows, parts.front().b.cols())};
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.a.middleRows(at, p.a.rows()) = p.a;
    out.b.middleRows(at, p.b.rows()) = p.b;
    at += p.a.rows();
  }
  return out;
}

CcaModel fit_cca(const MatrixXd& a, const MatrixXd& b, std::size_t r, double ridge) {
  if (a.rows() != b.rows()) throw std::invalid_argument("fit_cca: views differ in sample count");
  if (!(ridge >= 0.0)) throw std::invalid_argument("fit_cca: ridge must be >= 0");
  if (r == 0) throw std::invalid_argument("fit_cca: r must be positive");
  const auto keep = static_cast<Eigen::Index>(
      std::min({r, static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(b.cols())}));
  const Eigen::Index n = a.rows();
  if (n < keep + 1) {
    throw std::invalid_argument("fit_cca: need at least " + std::to_string(keep + 1) +
                                " samples, got " + std::to_string(n));
  }

  CcaModel m;
  m.mean_a = a.colwise().mean().transpose();
  m.mean_b = b.colwise().mean().transpose();
  const MatrixXd ca = a.rowwise() - m.mean_a.transpose();
  const MatrixXd cb = b.rowwise() - m.mean_b.transpose();
  const double scale = 1.0 / static_cast<double>(n - 1);
  const MatrixXd saa = scale * ca.transpose() * ca + ridge * MatrixXd::Identity(a.cols(), a.cols());
  const MatrixXd sbb = scale * cb.transpose() * cb + ridge * MatrixXd::Identity(b.cols(), b.cols());
  const MatrixXd sab = scale * ca.transpose() * cb;

  const MatrixXd wa = inverse_sqrt(saa, "a");
  const MatrixXd wb = inverse_sqrt(sbb, "b");
  Eigen::JacobiSVD<MatrixXd> svd(wa * sab * wb, Eigen::ComputeThinU | Eigen::ComputeThinV);
  m.u = wa * svd.matrixU().leftCols(keep);
  m.v = wb * svd.matrixV().leftCols(keep);
  m.rho = svd.singularValues().head(keep).cwiseMax(0.0).cwiseMin(1.0);
  return m;
}

double cca_pair_score(const CcaModel& model, const VectorXd& a, const VectorXd& b) {
  if (a.isZero(0.0) || b.isZero(0.0)) return 0.0;
  const VectorXd x = model.u.transpose() * (a - model.mean_a);
  const VectorXd y = model.v.transpose() * (b - model.mean_b);
  const double num = (model.rho.array() * x.array() * y.array()).sum();
  const double den = std::sqrt((model.rho.array() * x.array().square()).sum() *
                               (model.rho.array() * y.array().square()).sum());
  return den < 1e-12 ? 0.0 : num / den;
}

double cca_score(const CcaModel& model, const ArticleRecord& record) {
  const CcaViews v = build_views(record);
  if (v.a.cols() != model.u.rows() || v.b.cols() != model.v.rows()) {
    throw ShapeError("cca_score: record '" + record.article_id + "' has view widths " +
                     std::to_string(v.a.cols()) + "/" + std::to_string(v.b.cols()) +
                     ", model expects " + std::to_string(model.u.rows()) + "/" +
                     std::to_string(model.v.rows()));
  }
  double total = 0.0;
  for (Eigen::Index p = 0; p < v.a.rows(); ++p) {
    total += cca_pair_score(model, v.a.row(p).transpose(), v.b.row(p).transpose());
  }
  return total / static_cast<double>(v.a.rows());
}

std::vector<double> cca_scores(const CcaModel& model, std::span<const ArticleRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(cca_score(model, r));
  return out;
}

Calibration calibrate_threshold(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("calibrate_threshold: scores and labels differ in length");
  }
  const auto n_real = std::count(labels.begin(), labels.end(), Label::kReal);
  if (n_real == 0 || n_real == static_cast<std::ptrdiff_t>(labels.size())) {
    throw std::invalid_argument("calibrate_threshold: validation split has a single class");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return scores[x] < scores[y];
  });

  // Sweep thresholds upward: everything at or above the candidate is REAL.
  std::vector<double> candidates;
  std::vector<std::size_t> correct;
  std::size_t below_generated = 0;
  std::size_t above_real = static_cast<std::size_t>(n_real);
  const double lo = scores[order.front()], hi = scores[order.back()];
  candidates.push_back(lo - 1.0);
  correct.push_back(above_real);
  for (std::size_t i = 0; i < order.size();) {
    const double value = scores[order[i]];
    while (i < order.size() && scores[order[i]] == value) {
      if (labels[order[i]] == Label::kReal) {
        --above_real;
      } else {
        ++below_generated;
      }
      ++i;
    }
    candidates.push_back(i < order.size() ? 0.5 * (value + scores[order[i]]) : hi + 1.0);
    correct.push_back(above_real + below_generated);
  }

  const std::size_t best = *std::max_element(correct.begin(), correct.end());
  std::size_t first = 0;
  while (correct[first] != best) ++first;
  std::size_t last = first;
  while (last + 1 < correct.size() && correct[last + 1] == best) ++last;
  return {0.5 * (candidates[first] + candidates[last]),
          static_cast<double>(best) / static_cast<double>(scores.size())};
}

Calibration calibrate_threshold(CcaModel& model, std::span<const ArticleRecord> validation) {
  const std::vector<double> scores = cca_scores(model, validation);
  std::vector<Label> labels;
  labels.reserve(validation.size());
  for (const auto& r : validation) labels.push_back(r.label);
  const Calibration c = calibrate_threshold(scores, labels);
  model.threshold = c.threshold;
  return c;
}

NamedTensors cca_to_named(const CcaModel& model) {
  NamedTensors named;
  named["cca.u"] = to_tensor(model.u);
  named["cca.v"] = to_tensor(model.v);
  named["cca.mean_a"] = to_tensor(model.mean_a);
  named["cca.mean_b"] = to_tensor(model.mean_b);
  named["cca.rho"] = to_tensor(model.rho);
  named["cca.threshold"] = FeatureTensor({1}, {static_cast<float>(model.threshold)});
  return named;
}

CcaModel cca_from_named(const NamedTensors& named) {
  CcaModel m;
  m.u = matrix_entry(named, "cca.u");
  m.v = matrix_entry(named, "cca.v");
  m.mean_a = vector_entry(named, "cca.mean_a");
  m.mean_b = vector_entry(named, "cca.mean_b");
  m.rho = vector_entry(named, "cca.rho");
  const VectorXd t = vector_entry(named, "cca.threshold");
  if (t.size() != 1) throw FormatError("checkpoint entry 'cca.threshold' must hold one value");
  m.threshold = t(0);
  if (m.u.cols() != m.rho.size() || m.v.cols() != m.rho.size() ||
      m.u.rows() != m.mean_a.size() || m.v.rows() != m.mean_b.size()) {
    throw FormatError("checkpoint CCA entries have inconsistent shapes");
  }
  return m;
}

}  // namespace didan
