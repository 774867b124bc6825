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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "didan/errors.h"
#include "toy.h"

namespace didan {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

MatrixXd covariance(const MatrixXd& x, const MatrixXd& y) {
  const MatrixXd cx = x.rowwise() - x.colwise().mean();
  const MatrixXd cy = y.rowwise() - y.colwise().mean();
  return cx.transpose() * cy / static_cast<double>(x.rows() - 1);
}

// Views sharing one latent: a0 = z, b0 = c z + sqrt(1 - c^2) e.
std::pair<MatrixXd, MatrixXd> correlated_views(std::mt19937_64& rng, Eigen::Index n, double c) {
  const MatrixXd z = gaussian(rng, n, 1);
  MatrixXd a = gaussian(rng, n, 3);
  MatrixXd b = gaussian(rng, n, 4);
  a.col(0) = z;
  b.col(0) = c * z + std::sqrt(1.0 - c * c) * gaussian(rng, n, 1);
  return {a, b};
}

TEST(FitCca, IdenticalViewsCorrelatePerfectly) {
  std::mt19937_64 rng(1);
  const MatrixXd a = gaussian(rng, 500, 3);
  const CcaModel m = fit_cca(a, a, 3, 1e-6);
  ASSERT_EQ(m.components(), 3u);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(m.rho(j), 1.0, 1e-4);
}

TEST(FitCca, IndependentNoiseHasSmallCorrelation) {
  std::mt19937_64 rng(2);
  const CcaModel m = fit_cca(gaussian(rng, 2000, 3), gaussian(rng, 2000, 4), 3, 1e-3);
  EXPECT_LT(m.rho(0), 0.2);
}

TEST(FitCca, RecoversPlantedCorrelation) {
  std::mt19937_64 rng(3);
  const auto [a, b] = correlated_views(rng, 2000, 0.8);
  const CcaModel m = fit_cca(a, b, 3, 1e-3);
  EXPECT_NEAR(m.rho(0), 0.8, 0.05);
  EXPECT_LT(m.rho(1), 0.2);
  for (Eigen::Index j = 1; j < m.rho.size(); ++j) EXPECT_LE(m.rho(j), m.rho(j - 1));
}

TEST(FitCca, ProjectionsAreWhitenedAndDiagonal) {
  std::mt19937_64 rng(4);
  const auto [a, b] = correlated_views(rng, 400, 0.6);
  const double ridge = 1e-3;
  const CcaModel m = fit_cca(a, b, 3, ridge);
  const MatrixXd saa = covariance(a, a) + ridge * MatrixXd::Identity(3, 3);
  const MatrixXd sbb = covariance(b, b) + ridge * MatrixXd::Identity(4, 4);
  const MatrixXd sab = covariance(a, b);
  EXPECT_LT((m.u.transpose() * saa * m.u - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT((m.v.transpose() * sbb * m.v - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-4);
  const MatrixXd cross = m.u.transpose() * sab * m.v;
  EXPECT_LT((cross - MatrixXd(m.rho.asDiagonal())).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitCca, MatchesGeneralizedEigenproblem) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<int> rows(20, 50);
  for (int trial = 0; trial < 30; ++trial) {
    const int da = dim(rng), db = dim(rng), n = rows(rng);
    const MatrixXd a = gaussian(rng, n, da);
    MatrixXd b = gaussian(rng, n, db);
    b.col(0) += 0.7 * a.col(0);
    const double ridge = 1e-3;
    const MatrixXd saa = covariance(a, a) + ridge * MatrixXd::Identity(da, da);
    const MatrixXd sbb = covariance(b, b) + ridge * MatrixXd::Identity(db, db);
    const MatrixXd sab = covariance(a, b);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(sab * sbb.inverse() * sab.transpose(),
                                                              saa);
    const VectorXd ev = solver.eigenvalues().reverse();  // descending rho^2

    const CcaModel m = fit_cca(a, b, 6, ridge);
    ASSERT_EQ(m.components(), static_cast<std::size_t>(std::min(da, db)));
    for (Eigen::Index j = 0; j < m.rho.size(); ++j) {
      EXPECT_NEAR(m.rho(j), std::sqrt(std::max(ev(j), 0.0)), 1e-6) << "trial " << trial;
    }
  }
}

TEST(FitCca, RejectsTooFewSamples) {
  std::mt19937_64 rng(6);
  EXPECT_THROW(fit_cca(gaussian(rng, 3, 3), gaussian(rng, 3, 3), 3, 1e-3), std::invalid_argument);
  EXPECT_THROW(fit_cca(gaussian(rng, 10, 3), gaussian(rng, 9, 3), 3, 1e-3), std::invalid_argument);
}

TEST(CcaScore, InvariantUnderAffineReparameterization) {
  std::mt19937_64 rng(7);
  const auto [a, b] = correlated_views(rng, 300, 0.7);
  const MatrixXd ma = gaussian(rng, 3, 3) + 3.0 * MatrixXd::Identity(3, 3);
  const MatrixXd mb = gaussian(rng, 4, 4) + 3.0 * MatrixXd::Identity(4, 4);
  const VectorXd sa = gaussian(rng, 3, 1), sb = gaussian(rng, 4, 1);
  const MatrixXd a2 = (a * ma).rowwise() + sa.transpose();
  const MatrixXd b2 = (b * mb).rowwise() + sb.transpose();
  const CcaModel m1 = fit_cca(a, b, 3, 0.0);
  const CcaModel m2 = fit_cca(a2, b2, 3, 0.0);
  for (int i = 0; i < 50; ++i) {
    const VectorXd x = gaussian(rng, 3, 1), y = gaussian(rng, 4, 1);
    const VectorXd x2 = ma.transpose() * x + sa, y2 = mb.transpose() * y + sb;
    EXPECT_NEAR(cca_pair_score(m1, x, y), cca_pair_score(m2, x2, y2), 1e-6);
  }
}

TEST(CcaScore, BoundedAndZeroViewScoresZero) {
  std::mt19937_64 rng(8);
  const auto [a, b] = correlated_views(rng, 300, 0.7);
  const CcaModel m = fit_cca(a, b, 3, 1e-3);
  for (int i = 0; i < 100; ++i) {
    const double s = cca_pair_score(m, gaussian(rng, 3, 1), gaussian(rng, 4, 1));
    EXPECT_LE(std::abs(s), 1.0 + 1e-12);
  }
  EXPECT_EQ(cca_pair_score(m, VectorXd::Zero(3), gaussian(rng, 4, 1)), 0.0);
  EXPECT_EQ(cca_pair_score(m, gaussian(rng, 3, 1), VectorXd::Zero(4)), 0.0);
}

TEST(CcaScore, RecordWidthMismatchThrows) {
  std::mt19937_64 rng(9);
  testing::ToyShape shape;
  std::vector<ArticleRecord> records;
  for (int i = 0; i < 40; ++i) records.push_back(testing::random_record(rng, shape));
  const CcaViews views = build_views(records, false);
  EXPECT_EQ(views.b.cols(), static_cast<Eigen::Index>(shape.d_image + shape.d_text));
  const CcaModel m = fit_cca(views.a, views.b, 4, 1e-3);
  EXPECT_NO_THROW(cca_score(m, records[0]));
  shape.d_text = 5;
  EXPECT_THROW(cca_score(m, testing::random_record(rng, shape)), ShapeError);
}

TEST(BuildViews, RealOnlySkipsGenerated) {
  std::mt19937_64 rng(10);
  std::vector<ArticleRecord> records;
  std::size_t real_pairs = 0, all_pairs = 0;
  for (int i = 0; i < 10; ++i) {
    records.push_back(testing::random_record(rng, testing::ToyShape{}));
    all_pairs += records.back().pairs.size();
    if (records.back().label == Label::kReal) real_pairs += records.back().pairs.size();
  }
  EXPECT_EQ(build_views(records, true).a.rows(), static_cast<Eigen::Index>(real_pairs));
  EXPECT_EQ(build_views(records, false).a.rows(), static_cast<Eigen::Index>(all_pairs));
}

TEST(CalibrateThreshold, SeparableScores) {
  const std::vector<double> s = {0.1, 0.2, 0.8, 0.9};
  const std::vector<Label> l = {Label::kGenerated, Label::kGenerated, Label::kReal, Label::kReal};
  const Calibration c = calibrate_threshold(s, l);
  EXPECT_DOUBLE_EQ(c.threshold, 0.5);
  EXPECT_DOUBLE_EQ(c.accuracy, 1.0);
}

TEST(CalibrateThreshold, TiedOptimaTakeMidpoint) {
  const std::vector<double> s = {0.3, 0.5, 0.5, 0.7};
  const std::vector<Label> l = {Label::kGenerated, Label::kReal, Label::kGenerated, Label::kReal};
  const Calibration c = calibrate_threshold(s, l);
  EXPECT_DOUBLE_EQ(c.threshold, 0.5);
  EXPECT_DOUBLE_EQ(c.accuracy, 0.75);
}

TEST(CalibrateThreshold, InvertedScoresFallBackToMajority) {
  const std::vector<double> s = {0.1, 0.9};
  const std::vector<Label> l = {Label::kReal, Label::kGenerated};
  const Calibration c = calibrate_threshold(s, l);
  EXPECT_DOUBLE_EQ(c.accuracy, 0.5);
}

TEST(CalibrateThreshold, SingleClassThrows) {
  const std::vector<double> s = {0.1, 0.9};
  const std::vector<Label> l = {Label::kReal, Label::kReal};
  EXPECT_THROW(calibrate_threshold(s, l), std::invalid_argument);
}

TEST(CcaModel, NamedRoundTrip) {
  std::mt19937_64 rng(11);
  const auto [a, b] = correlated_views(rng, 100, 0.5);
  CcaModel m = fit_cca(a, b, 2, 1e-3);
  m.threshold = 0.25;
  const CcaModel back = cca_from_named(decode_checkpoint(encode_checkpoint(cca_to_named(m))));
  ASSERT_EQ(back.components(), 2u);
  EXPECT_FLOAT_EQ(static_cast<float>(back.threshold), 0.25f);
  EXPECT_LT((back.u - m.u).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + m.u.cwiseAbs().maxCoeff()));
  EXPECT_LT((back.rho - m.rho).cwiseAbs().maxCoeff(), 1e-6);
}

}  // namespace
}  // namespace didan
