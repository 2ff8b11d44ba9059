// Copyright 2026 The JNF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <unsupported/Eigen/MatrixFunctions>

#include "jnf/data/toy.hpp"
#include "jnf/error.hpp"
#include "jnf/eval/classifier.hpp"
#include "jnf/eval/estimators.hpp"
#include "jnf/eval/fid.hpp"
#include "jnf/eval/report.hpp"
#include "jnf/flow/posteriors.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace jnflow::eval {
namespace {

TEST(Fid, ShiftedIdentityGaussiansGiveSquaredShift) {
  const Vector mu_r = Vector::Zero(4);
  const Vector mu_g = Vector::Ones(4);
  const Matrix i4 = Matrix::Identity(4, 4);
  EXPECT_NEAR(fid_from_moments(mu_r, i4, mu_g, i4), 4.0, 1e-6);
  EXPECT_NEAR(fid_from_moments(mu_r, i4, mu_r, i4), 0.0, 1e-6);
}

TEST(Fid, MatchesDenseMatrixSquareRootAndIsSymmetric) {
  Rng rng(1);
  const Matrix a = rng.normal_matrix(5, 5);
  const Matrix b = rng.normal_matrix(5, 5);
  const Matrix sr = a * a.transpose() + 0.1 * Matrix::Identity(5, 5);
  const Matrix sg = b * b.transpose() + 0.1 * Matrix::Identity(5, 5);
  const Vector mr = rng.normal_matrix(5, 1);
  const Vector mg = rng.normal_matrix(5, 1);
  const Matrix prod = sr * sg;
  const Matrix root = prod.sqrt();
  const double ref = (mr - mg).squaredNorm() + (sr + sg).trace() - 2.0 * root.trace();
  const double f = fid_from_moments(mr, sr, mg, sg);
  EXPECT_NEAR(f, ref, 1e-8 * std::max(1.0, std::abs(ref)));
  EXPECT_NEAR(fid_from_moments(mg, sg, mr, sr), f, 1e-8 * std::max(1.0, f));
}

TEST(Fid, SampleVersionNeedsMoreRowsThanColumns) {
  Rng rng(2);
  EXPECT_THROW(fid(rng.normal_matrix(3, 4), rng.normal_matrix(10, 4)), Error);
  const Matrix x = rng.normal_matrix(50, 3);
  EXPECT_NEAR(fid(x, x), 0.0, 1e-6);
}

TEST(Fid, PsdSqrtSquaresBack) {
  Rng rng(3);
  const Matrix g = rng.normal_matrix(4, 4);
  const Matrix s = g * g.transpose();
  const Matrix r = psd_sqrt(s);
  EXPECT_TRUE((r * r).isApprox(s, 1e-10));
}

TEST(Estimators, LogMeanExpIsStable) {
  Vector w(3);
  w << 1000.0, 1000.0, 1000.0;
  EXPECT_NEAR(log_mean_exp(w).value, 1000.0, 1e-9);
  Vector v(2);
  v << 0.0, std::log(3.0);
  EXPECT_NEAR(log_mean_exp(v).value, std::log(2.0), 1e-12);
}

TEST(Estimators, ImportanceSamplingMatchesLinearGaussianMarginal) {
  const auto lg = testing::make_linear_gaussian(2, 4, 5);
  Rng rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const RowVector x = rng.normal_matrix(1, 4) * 1.3;
    const auto est = estimate_joint_ll(lg.model, {x}, 10000, rng);
    EXPECT_NEAR(est.value, lg.log_marginal(x), 0.05);
  }
}

TEST(Estimators, SingleImportanceSampleIsOneLogWeight) {
  const auto lg = testing::make_linear_gaussian(2, 3, 7);
  const RowVector x = RowVector::Ones(3);
  Rng a(8), b(8);
  const auto est = estimate_joint_ll(lg.model, {x}, 1, a);
  const Vector w = log_importance_weights(lg.model, {x}, 1, b);
  EXPECT_DOUBLE_EQ(est.value, w(0));
}

TEST(Estimators, ImportanceSamplingRejectsZeroSamples) {
  const auto lg = testing::make_linear_gaussian(2, 3, 9);
  Rng rng(1);
  EXPECT_THROW(estimate_joint_ll(lg.model, {RowVector::Zero(3)}, 0, rng), Error);
}

TEST(Estimators, ConditionalLikelihoodMatchesGaussianIntegral) {
  const auto lg = testing::make_linear_gaussian(2, 3, 10);
  Vector mean(2), lv(2);
  mean << 0.4, -0.6;
  lv << -0.5, 0.2;
  const auto post = testing::fixed_gaussian(mean, lv);
  const RowVector x = (RowVector(3) << 0.3, -1.0, 0.8).finished();
  const Matrix s = lv.array().exp().matrix().asDiagonal();
  const Vector m_x = (mean.transpose() * lg.w + lg.b).transpose();
  const Matrix c_x = lg.w.transpose() * s * lg.w + Matrix::Identity(3, 3);
  const double expect = testing::gaussian_log_density(x.transpose(), m_x, c_x);
  Rng rng(11);
  const auto est = estimate_cond_ll(lg.model, post, 0, RowVector::Zero(1), x, 20000, rng);
  EXPECT_NEAR(est.value, expect, 4 * est.std_error + 1e-3);
}

struct TwoModal {
  data::MultimodalDataset ds;
  vae::JointModel joint;
  flow::UnimodalPosteriorSet set;
};

TwoModal two_modal(std::uint64_t seed) {
  data::ToyConfig tc;
  tc.image_side = 10;
  tc.size_min = 2;
  tc.size_max = 4;
  tc.n_samples = 64;
  tc.seed = seed;
  auto ds = data::generate_toy_dataset(tc);
  Rng rng(seed);
  vae::JointModelConfig jc;
  jc.encoder_hidden = {16};
  jc.decoder_hidden = {16};
  vae::JointModel joint(ds.specs(), jc, rng);
  flow::FlowConfig fc;
  fc.made_hidden = {16};
  fc.encoder_hidden = {16};
  flow::UnimodalPosteriorSet set(ds.specs(), 2, fc, flow::ConditioningMode::raw_data, rng);
  testing::randomize_parameters(set.parameters(), rng, 0.2);
  return {std::move(ds), std::move(joint), std::move(set)};
}

TEST(Estimators, ViBoundHoldsForAnyModel) {
  auto m = two_modal(12);
  Rng rng(13);
  int satisfied = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::vector<RowVector> sample{m.ds.modality(0).row(i), m.ds.modality(1).row(i)};
    const auto r = vi_bound_check(m.joint, m.set, sample, sample, 500, rng);
    EXPECT_TRUE(std::isfinite(r.lhs) && std::isfinite(r.rhs));
    satisfied += r.satisfied ? 1 : 0;
  }
  EXPECT_GE(satisfied, 19);
}

// Two separable Gaussian clusters in R^2 labelled 0 / 1.
std::pair<Matrix, std::vector<int>> clusters(int n, Rng& rng) {
  Matrix x = rng.normal_matrix(n, 2) * 0.3;
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    x(i, 0) += i % 2 == 0 ? -2.0 : 2.0;
  }
  return {x, y};
}

TEST(Classifier, TrainsAndJudgesCoherence) {
  Rng rng(14);
  const auto [x, y] = clusters(600, rng);
  const data::ModalitySpec spec{"p", {2}, data::LikelihoodFamily::gaussian_unit_variance};
  ClassifierConfig cfg;
  cfg.hidden = {16};
  cfg.train.epochs = 20;
  cfg.train.batch_size = 32;
  cfg.train.adam.learning_rate = 1e-2;
  const auto clf = train_classifier(spec, x, y, cfg);
  EXPECT_GT(clf.accuracy_on_test(), 0.97);
  EXPECT_NO_THROW(require_usable(clf, 0.9));

  const Generator same = [](const Matrix& s, Rng&) { return s; };
  const Generator flipped = [](const Matrix& s, Rng&) {
    Matrix out = s;
    out.col(0) = -out.col(0);
    return out;
  };
  EXPECT_GT(coherence(same, clf, x, y, 2, rng), 0.97);
  EXPECT_LT(coherence(flipped, clf, x, y, 2, rng), 0.03);
  EXPECT_DOUBLE_EQ(label_agreement(clf, x.topRows(0), {}), 0.0);
}

TEST(Classifier, WeakClassifierIsRefused) {
  Rng rng(15);
  const data::ModalitySpec spec{"p", {2}, data::LikelihoodFamily::gaussian_unit_variance};
  Classifier clf(spec, 2, {4}, rng);
  clf.set_accuracy_on_test(0.5);
  try {
    require_usable(clf, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::accuracy_below_floor);
  }
}

TEST(Classifier, SaveLoadRoundTrip) {
  Rng rng(16);
  const data::ModalitySpec spec{"p", {3}, data::LikelihoodFamily::gaussian_unit_variance};
  Classifier clf(spec, 4, {8}, rng);
  clf.set_accuracy_on_test(0.93);
  const auto dir = std::filesystem::temp_directory_path() / "jnf_test_classifier_io";
  std::filesystem::remove_all(dir);
  clf.save(dir);
  const auto back = Classifier::load(dir);
  const Matrix x = rng.normal_matrix(5, 3);
  EXPECT_EQ(back.logits(x), clf.logits(x));
  EXPECT_DOUBLE_EQ(back.accuracy_on_test(), 0.93);
  EXPECT_EQ(back.hash(), clf.hash());
  std::filesystem::remove_all(dir);
}

TEST(Report, TextRoundTrip) {
  EvalReport r;
  r.model_id = "jnf";
  r.dataset_id = "toy";
  r.seed = 3;
  r.n_is = 1000;
  r.n_mc = 100;
  r.joint_ll = -123.456789;
  r.cond_ll["circles|squares"] = -40.5;
  r.coherence["squares|circles"] = 0.97;
  r.fid["circles|squares"] = 1.25;
  r.vi_bound_violation_rate = 0.01;
  r.metadata["config_hash"] = "abc";
  const auto back = EvalReport::parse(r.to_text());
  EXPECT_EQ(back.to_text(), r.to_text());
  EXPECT_DOUBLE_EQ(*back.joint_ll, *r.joint_ll);
  EXPECT_EQ(back.coherence, r.coherence);
  EXPECT_FALSE(back.empty());
  EXPECT_TRUE(EvalReport{}.empty());
}

}  // namespace
}  // namespace jnflow::eval
