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

#include <chrono>
#include <cmath>
#include <sstream>

#include "acceptance/criteria.hpp"
#include "jnf/dcca/cca.hpp"
#include "jnf/dcca/projection.hpp"
#include "jnf/eval/estimators.hpp"
#include "jnf/eval/fid.hpp"
#include "jnf/flow/flow_stack.hpp"
#include "jnf/flow/made.hpp"
#include "jnf/nn.hpp"
#include "jnf/poe/hmc.hpp"
#include "jnf/poe/poe.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace jnflow::acceptance {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// Appends the runtime check and returns the combined outcome.
Outcome finish(bool ok, std::string detail, const Stopwatch& w, double limit_seconds) {
  const bool fast = w.seconds() < limit_seconds;
  if (!fast) detail += "; runtime above " + num(limit_seconds) + " s";
  return {ok && fast, detail};
}

}  // namespace

Outcome criterion_made(const Context&) {
  Stopwatch w;
  double worst_det = 0.0, worst_trip = 0.0;
  int blocks = 0;
  for (int k = 0; k < 20; ++k) {
    const int d = 2 + k % 3;
    const int ctx_dim = k % 2 == 0 ? 0 : 2;
    Rng rng(1000 + static_cast<std::uint64_t>(k));
    flow::MadeBlock block("made", d, ctx_dim, {16, 16}, rng);
    testing::randomize_parameters(block.parameters(), rng, 0.5);
    ++blocks;
    for (int p = 0; p < 5; ++p) {
      const RowVector u = rng.normal_matrix(1, d);
      const RowVector c = rng.normal_matrix(1, ctx_dim);
      auto fwd = [&](const RowVector& x) -> RowVector {
        return block.forward(ad::constant(Matrix(x)), ad::constant(Matrix(c))).out.value();
      };
      const Matrix jac = testing::numeric_jacobian(fwd, u, 1e-5);
      const double numeric = std::abs(jac.determinant());
      const auto res = block.forward(ad::constant(Matrix(u)), ad::constant(Matrix(c)));
      const double analytic = std::exp(res.log_det.scalar());
      worst_det = std::max(worst_det, std::abs(analytic - numeric) / numeric);
      const Matrix back = block.inverse(res.out, ad::constant(Matrix(c))).out.value();
      worst_trip = std::max(worst_trip, (back - Matrix(u)).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = worst_det < 1e-4 && worst_trip < 1e-5;
  return finish(ok,
                std::to_string(blocks) + " blocks, max rel det error " + num(worst_det) + " (< 1e-4), max round trip " +
                    num(worst_trip) + " (< 1e-5)",
                w, 60.0);
}

Outcome criterion_flow_normalization(const Context&) {
  Stopwatch w;
  // Fit a 2-d flow to a banana-shaped target by maximum likelihood.
  Rng rng(21);
  flow::FlowConfig cfg;
  cfg.n_blocks = 4;
  cfg.made_hidden = {32, 32};
  cfg.conditional = false;
  cfg.encoder_hidden = {};
  flow::FlowStack stack("banana", 1, 2, cfg, rng);
  auto draw = [&](int n) {
    Matrix x = rng.normal_matrix(n, 2);
    for (int i = 0; i < n; ++i) {
      x(i, 0) *= 1.2;
      x(i, 1) = 0.5 * x(i, 1) + 0.4 * x(i, 0) * x(i, 0) - 1.0;
    }
    return x;
  };
  nn::AdamConfig adam;
  adam.learning_rate = 3e-3;
  nn::Adam opt(stack.parameters(), adam);
  const Matrix input = Matrix::Zero(256, 1);
  double nll = 0.0;
  for (int step = 0; step < 1500; ++step) {
    opt.zero_grad();
    const ad::Var loss = ad::mean(stack.log_density(ad::constant(draw(256)), ad::constant(input))) * -1.0;
    ad::backward(loss);
    opt.step();
    nll = loss.scalar();
  }
  // Composite Simpson rule on [-6, 6]^2.
  const int n = 601;
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / (n - 1);
  Vector weight(n);
  for (int i = 0; i < n; ++i) weight(i) = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  weight *= h / 3.0;
  ad::FrozenParameters frozen;
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    Matrix row(n, 2);
    for (int j = 0; j < n; ++j) row.row(j) << lo + i * h, lo + j * h;
    const Matrix lq = stack.log_density(ad::constant(row), ad::constant(Matrix::Zero(n, 1))).value();
    mass += weight(i) * weight.dot(lq.col(0).array().exp().matrix());
  }
  const bool ok = mass >= 0.99 && mass <= 1.01;
  return finish(ok, "trained 4-block flow (final NLL " + num(nll) + "), mass on [-6,6]^2 = " + num(mass, 6) +
                        " (in [0.99, 1.01])",
                w, 60.0);
}

Outcome criterion_hmc_poe(const Context&) {
  Stopwatch w;
  bool ok = true;
  std::string detail;
  for (int d : {2, 8}) {
    Rng rng(300 + static_cast<std::uint64_t>(d));
    // Expert variances log-uniform in [e^-3, 1], means uniform in [-1, 1].
    Vector m1 = rng.uniform_matrix(d, 1, -1.0, 1.0);
    Vector m2 = rng.uniform_matrix(d, 1, -1.0, 1.0);
    Vector lv1 = rng.uniform_matrix(d, 1, -3.0, 0.0);
    Vector lv2 = rng.uniform_matrix(d, 1, -3.0, 0.0);
    const auto e1 = testing::fixed_gaussian(m1, lv1);
    const auto e2 = testing::fixed_gaussian(m2, lv2);
    poe::PoeTarget target(d);
    target.add_expert(e1, RowVector::Zero(1));
    target.add_expert(e2, RowVector::Zero(1));
    // Analytic product N(m1,S1) N(m2,S2) / N(0,I): precisions add, minus I.
    const Vector p1 = (-lv1).array().exp(), p2 = (-lv2).array().exp();
    const Vector prec = p1 + p2 - Vector::Ones(d);
    const Vector mean = (p1.cwiseProduct(m1) + p2.cwiseProduct(m2)).cwiseQuotient(prec);
    const Matrix cov = prec.cwiseInverse().asDiagonal();

    poe::HmcConfig cfg;
    cfg.n_chains = 8;
    cfg.samples_per_chain = 2000;
    cfg.burn_in = 400;
    // Diagonal metric from burn-in; in whitened units a trajectory of
    // about a quarter period decorrelates successive draws.
    cfg.adapt_metric = true;
    cfg.step_size = 0.25;
    cfg.leapfrog_steps = 6;
    cfg.step_jitter = 0.2;
    cfg.seed = 77 + static_cast<std::uint64_t>(d);
    const auto res = poe::hmc_sample(target, cfg);
    const auto [m, c] = testing::moments(res.samples);
    const double mean_err = (m - mean).cwiseAbs().maxCoeff();
    const double cov_err = (c - cov).norm() / cov.norm();
    ok = ok && mean_err < 0.05 && cov_err < 0.02 && res.samples.rows() == 16000;
    detail += (detail.empty() ? "" : "; ") + std::string("d=") + std::to_string(d) + ": mean abs err " +
              num(mean_err) + " (< 0.05), cov rel Frobenius " + num(cov_err) + " (< 0.02), accept " +
              num(res.diagnostics.mean_acceptance(), 3);
  }
  return finish(ok, detail, w, 120.0);
}

Outcome criterion_cca(const Context&) {
  Stopwatch w;
  const int p = 4, n_train = 20000, n_eval = 100000;
  const Vector rho = (Vector(p) << 0.9, 0.5, 0.0, 0.0).finished();
  Rng rng(401);
  // Well-conditioned mixings: orthogonal times diag(1..2).
  auto mixing = [&]() {
    const Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(p, p));
    const Matrix q = qr.householderQ();
    Vector s(p);
    for (int i = 0; i < p; ++i) s(i) = 1.0 + static_cast<double>(i) / (p - 1);
    return Matrix(q * s.asDiagonal());
  };
  const Matrix a1 = mixing(), a2 = mixing();
  auto sample = [&](int n) {
    const Matrix s1 = rng.normal_matrix(n, p);
    const Matrix noise = rng.normal_matrix(n, p);
    Matrix s2(n, p);
    for (int j = 0; j < p; ++j) s2.col(j) = rho(j) * s1.col(j) + std::sqrt(1.0 - rho(j) * rho(j)) * noise.col(j);
    return std::vector<Matrix>{s1 * a1, s2 * a2};
  };
  const std::vector<data::ModalitySpec> specs{{"x1", {p}, data::LikelihoodFamily::gaussian_unit_variance},
                                              {"x2", {p}, data::LikelihoodFamily::gaussian_unit_variance}};
  const auto train = sample(n_train);
  const auto held_out = sample(n_eval);
  const data::MultimodalDataset train_ds(specs, train, {});
  const data::MultimodalDataset eval_ds(specs, held_out, {});

  dcca::DccaConfig cfg;
  cfg.output_dim = p;
  cfg.hidden = {};
  cfg.regularizer = 1e-4;
  dcca::DccaProjectionSet set(specs, cfg, rng);
  nn::TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 1000;
  tc.adam.learning_rate = 1e-2;
  tc.seed = 402;
  dcca::train_dcca(set, train_ds, eval_ds, tc);

  const Vector s = set.pair_spectra().at(0);
  const double err = (s - rho).cwiseAbs().maxCoeff();
  const double total = s.sum(), expected = rho.sum();
  const double total_rel = std::abs(total - expected) / expected;
  std::string values;
  for (int i = 0; i < s.size(); ++i) values += (i ? ", " : "") + num(s(i), 3);
  return finish(err <= 0.03 && total_rel <= 0.05,
                "singular values (" + values + ") vs (0.9, 0.5, 0, 0): max err " + num(err) +
                    " (<= 0.03); total " + num(total) + " vs " + num(expected) + ", rel " + num(total_rel) +
                    " (<= 0.05)",
                w, 120.0);
}

Outcome criterion_likelihood(const Context&) {
  Stopwatch w;
  // Joint importance sampling on the linear-Gaussian VAE x = z W + b + noise.
  const auto lg = testing::make_linear_gaussian(2, 4, 501);
  Rng rng(502);
  double worst_is = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const RowVector x = rng.normal_matrix(1, 4) * 1.3;
    const auto est = eval::estimate_joint_ll(lg.model, {x}, 10000, rng);
    worst_is = std::max(worst_is, std::abs(est.value - lg.log_marginal(x)));
  }

  // Conditional estimator: a second modality y = z V + c + noise observed
  // together with x; the source posterior q(z | y) is the diagonal part of
  // the exact p(z | y).  Analytic target: the Gaussian integral of p(x | z)
  // under q.
  const Matrix v = rng.normal_matrix(2, 3) * 0.8;
  const RowVector c = rng.normal_matrix(1, 3) * 0.5;
  double worst_cond = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const RowVector z = rng.normal_matrix(1, 2);
    const RowVector x = z * lg.w + lg.b + RowVector(rng.normal_matrix(1, 4));
    const RowVector y = z * v + c + RowVector(rng.normal_matrix(1, 3));
    const Matrix prec = Matrix::Identity(2, 2) + v * v.transpose();
    const Matrix post_cov = prec.inverse();
    const Vector mean = post_cov * v * (y - c).transpose();
    const Vector lv = post_cov.diagonal().array().log();
    const auto post = testing::fixed_gaussian(mean, lv);
    const Matrix s = lv.array().exp().matrix().asDiagonal();
    const Vector m_x = (mean.transpose() * lg.w + lg.b).transpose();
    const Matrix c_x = lg.w.transpose() * s * lg.w + Matrix::Identity(4, 4);
    const double expect = testing::gaussian_log_density(x.transpose(), m_x, c_x);
    const auto cond = eval::estimate_cond_ll(lg.model, post, 0, RowVector::Zero(1), x, 100000, rng);
    worst_cond = std::max(worst_cond, std::abs(cond.value - expect));
  }
  return finish(worst_is < 0.05 && worst_cond < 0.05,
                "5 inputs each: max |IS - ln p(x)| " + num(worst_is) +
                    " nats (< 0.05, n_is=1e4), max |cond MC - analytic| " + num(worst_cond) +
                    " nats (< 0.05, n_mc=1e5)",
                w, 60.0);
}

Outcome criterion_fid(const Context&) {
  Stopwatch w;
  const int d = 4;
  const double shifted = eval::fid_from_moments(Vector::Zero(d), Matrix::Identity(d, d), Vector::Ones(d),
                                                Matrix::Identity(d, d));
  Rng rng(901);
  const Matrix feats = rng.normal_matrix(500, d);
  const double same = eval::fid(feats, feats);
  const bool ok = std::abs(shifted - 4.0) <= 1e-6 && std::abs(same) < 1e-6;
  return finish(ok, "FID(N(0,I), N(1,I)) = " + num(shifted, 12) + " (4 +- 1e-6), identical sets " + num(same, 3) +
                        " (< 1e-6)",
                w, 10.0);
}

}  // namespace jnflow::acceptance
