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

#include "jnf/poe/hmc.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "jnf/error.hpp"
#include "jnf/random.hpp"

namespace jnflow::poe {

std::pair<Vector, Matrix> log_density_and_grad(const LogTarget& target, const Matrix& z) {
  ad::FrozenParameters frozen;
  const Var zv = ad::variable(z);
  const Var lp = target.log_density(zv);
  ad::backward(ad::sum(lp));
  return {lp.value().col(0), zv.grad()};
}

void HmcConfig::validate() const {
  if (!(step_size > 0.0)) throw Error(ErrorCode::invalid_config, "hmc step size must be positive");
  if (leapfrog_steps < 1) throw Error(ErrorCode::invalid_config, "hmc leapfrog steps must be >= 1");
  if (n_chains < 1) throw Error(ErrorCode::invalid_config, "hmc needs at least one chain");
  if (burn_in < 0) throw Error(ErrorCode::invalid_config, "hmc burn-in must be >= 0");
  if (samples_per_chain < 1) throw Error(ErrorCode::invalid_config, "hmc samples_per_chain must be >= 1");
  if (!(step_jitter >= 0.0 && step_jitter < 1.0)) throw Error(ErrorCode::invalid_config, "step_jitter must be in [0,1)");
  if (adapt_metric && burn_in < 8) throw Error(ErrorCode::invalid_config, "adapt_metric needs burn_in >= 8");
  if (adapt_steps < 0) throw Error(ErrorCode::invalid_config, "adapt_steps must be >= 0");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorCode::invalid_config, "target_accept must be in (0,1)");
  }
}

namespace {

// Leapfrog with one step size per row; rows that go non-finite are flagged.
struct Trajectory {
  Matrix z;
  Matrix v;
  Vector log_f;
  std::vector<bool> finite;
};

// `scale` holds per-row standard deviations of a diagonal metric: the
// momentum lives in whitened coordinates y = z / scale.
Trajectory integrate(const LogTarget& target, Matrix z, Matrix v, const Vector& eps, const Matrix& scale, int l) {
  auto [lf, g] = log_density_and_grad(target, z);
  for (int step = 0; step < l; ++step) {
    v += 0.5 * (eps.asDiagonal() * g.cwiseProduct(scale));
    z += eps.asDiagonal() * v.cwiseProduct(scale);
    std::tie(lf, g) = log_density_and_grad(target, z);
    v += 0.5 * (eps.asDiagonal() * g.cwiseProduct(scale));
  }
  std::vector<bool> finite(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    finite[static_cast<std::size_t>(r)] =
        z.row(r).allFinite() && v.row(r).allFinite() && g.row(r).allFinite() && std::isfinite(lf(r));
  }
  return {std::move(z), std::move(v), std::move(lf), std::move(finite)};
}

}  // namespace

PhaseState leapfrog(const LogTarget& target, const Matrix& z, const Matrix& v, double eps, int l) {
  if (l < 1) throw Error(ErrorCode::invalid_argument, "leapfrog needs l >= 1");
  if (z.cols() != target.dim() || v.rows() != z.rows() || v.cols() != z.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "leapfrog state has the wrong shape");
  }
  Trajectory t = integrate(target, z, v, Vector::Constant(z.rows(), eps), Matrix::Ones(z.rows(), z.cols()), l);
  for (bool f : t.finite) {
    if (!f) throw Error(ErrorCode::non_finite_gradient, "leapfrog produced a non-finite state");
  }
  return {std::move(t.z), std::move(t.v)};
}

double HmcDiagnostics::mean_acceptance() const {
  if (acceptance.empty()) return 0.0;
  double s = 0.0;
  for (double a : acceptance) s += a;
  return s / static_cast<double>(acceptance.size());
}

io::Manifest HmcDiagnostics::to_manifest() const {
  io::Manifest m;
  m.set("step_size", step_size);
  m.set("leapfrog_steps", leapfrog_steps);
  m.set("n_chains", n_chains);
  m.set("samples_per_chain", samples_per_chain);
  m.set("seed", static_cast<long long>(seed));
  m.set("acceptance.mean", mean_acceptance());
  for (std::size_t c = 0; c < acceptance.size(); ++c) m.set("acceptance.chain" + std::to_string(c), acceptance[c]);
  for (Eigen::Index j = 0; j < psrf.size(); ++j) m.set("psrf." + std::to_string(j), psrf(j));
  return m;
}

Matrix HmcResult::chain(int c) const {
  const int n = diagnostics.samples_per_chain;
  return samples.middleRows(static_cast<Eigen::Index>(c) * n, n);
}

Vector split_rhat(const std::vector<Matrix>& chains) {
  if (chains.empty()) return Vector();
  const Eigen::Index d = chains[0].cols();
  const Eigen::Index half = chains[0].rows() / 2;
  if (half < 2) return Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  std::vector<Matrix> parts;
  for (const auto& c : chains) {
    parts.push_back(c.topRows(half));
    parts.push_back(c.middleRows(half, half));
  }
  const double n = static_cast<double>(half);
  const double m = static_cast<double>(parts.size());
  Vector out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector means(parts.size());
    double w = 0.0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const Vector col = parts[p].col(j);
      means(static_cast<Eigen::Index>(p)) = col.mean();
      w += (col.array() - col.mean()).square().sum() / (n - 1.0);
    }
    w /= m;
    const double b_over_n = (means.array() - means.mean()).square().sum() / (m - 1.0);
    const double var_plus = (n - 1.0) / n * w + b_over_n;
    out(j) = w > 0.0 ? std::sqrt(var_plus / w) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

HmcResult hmc_sample(const LogTarget& target, const HmcConfig& cfg) {
  cfg.validate();
  const int d = target.dim();
  const int chains = cfg.n_chains;
  std::vector<Rng> rngs;
  for (int c = 0; c < chains; ++c) rngs.push_back(Rng::derive(cfg.seed, static_cast<std::uint64_t>(c)));

  Matrix z(chains, d);
  for (int c = 0; c < chains; ++c)
    for (int j = 0; j < d; ++j) z(c, j) = rngs[c].normal();
  Vector log_f = log_density_and_grad(target, z).first;

  double eps = cfg.step_size;
  // Dual averaging on the chain-mean acceptance rate.
  const double mu = std::log(10.0 * eps);
  double h_bar = 0.0;
  double log_eps_bar = 0.0;

  const int total_iters = cfg.adapt_steps + cfg.burn_in + cfg.samples_per_chain;
  Matrix samples(static_cast<Eigen::Index>(chains) * cfg.samples_per_chain, d);
  std::vector<long> accepted(static_cast<std::size_t>(chains), 0);

  // Diagonal metric: each chain estimates its own coordinate scales from
  // the second quarter of its burn-in and uses them for the rest.
  Matrix scale = Matrix::Ones(chains, d);
  const int window_begin = cfg.adapt_steps + cfg.burn_in / 4;
  const int window_end = cfg.adapt_steps + cfg.burn_in / 2;
  Matrix window_sum = Matrix::Zero(chains, d), window_sq = Matrix::Zero(chains, d);

  for (int it = 0; it < total_iters; ++it) {
    Matrix v(chains, d);
    Vector step(chains);
    for (int c = 0; c < chains; ++c) {
      for (int j = 0; j < d; ++j) v(c, j) = rngs[c].normal();
      step(c) = cfg.step_jitter > 0.0 ? eps * (1.0 + cfg.step_jitter * (2.0 * rngs[c].uniform() - 1.0)) : eps;
    }
    const Vector h0 = -log_f + 0.5 * v.rowwise().squaredNorm();
    Trajectory t = integrate(target, z, v, step, scale, cfg.leapfrog_steps);
    const bool recording = it >= cfg.adapt_steps + cfg.burn_in;
    double accept_sum = 0.0;
    for (int c = 0; c < chains; ++c) {
      const double u = rngs[c].uniform();
      double alpha = 0.0;
      if (t.finite[static_cast<std::size_t>(c)]) {
        const double h1 = -t.log_f(c) + 0.5 * t.v.row(c).squaredNorm();
        alpha = std::min(1.0, std::exp(h0(c) - h1));
        if (!std::isfinite(alpha)) alpha = 0.0;
      }
      accept_sum += alpha;
      if (u < alpha) {
        z.row(c) = t.z.row(c);
        log_f(c) = t.log_f(c);
        if (recording) ++accepted[static_cast<std::size_t>(c)];
      }
      if (recording) {
        samples.row(static_cast<Eigen::Index>(c) * cfg.samples_per_chain + (it - cfg.adapt_steps - cfg.burn_in)) =
            z.row(c);
      }
    }
    if (cfg.adapt_metric && it >= window_begin && it < window_end) {
      window_sum += z;
      window_sq += z.cwiseProduct(z);
      if (it + 1 == window_end) {
        const double n = static_cast<double>(window_end - window_begin);
        const Matrix mean = window_sum / n;
        const Matrix var = (window_sq / n - mean.cwiseProduct(mean)) * (n / (n - 1.0));
        // A coordinate that never moved in the window keeps the unit metric.
        scale = var.unaryExpr([](double x) { return x > 1e-12 ? std::sqrt(x) : 1.0; });
      }
    }
    if (it < cfg.adapt_steps) {
      const double m = static_cast<double>(it + 1);
      const double t0 = 10.0;
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (cfg.target_accept - accept_sum / chains) / (m + t0);
      const double log_eps = mu - std::sqrt(m) / 0.05 * h_bar;
      const double w = std::pow(m, -0.75);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
      eps = std::exp(log_eps);
      if (it + 1 == cfg.adapt_steps) eps = std::exp(log_eps_bar);
    }
  }

  HmcResult res;
  res.samples = std::move(samples);
  auto& diag = res.diagnostics;
  diag.step_size = eps;
  diag.leapfrog_steps = cfg.leapfrog_steps;
  diag.n_chains = chains;
  diag.samples_per_chain = cfg.samples_per_chain;
  diag.seed = cfg.seed;
  for (int c = 0; c < chains; ++c) {
    diag.acceptance.push_back(static_cast<double>(accepted[static_cast<std::size_t>(c)]) / cfg.samples_per_chain);
  }
  std::vector<Matrix> per_chain;
  for (int c = 0; c < chains; ++c) per_chain.push_back(res.chain(c));
  diag.psrf = split_rhat(per_chain);

  const double rate = diag.mean_acceptance();
  if (rate < 0.01) {
    throw Error(ErrorCode::degenerate_chains,
                "HMC acceptance rate " + std::to_string(rate) + " after burn-in; the step size is too large");
  }
  if (rate < 0.4 || rate > 0.95) {
    spdlog::warn("HMC acceptance rate {:.3f} outside [0.4, 0.95]; consider changing the step size {}", rate, eps);
  }
  return res;
}

}  // namespace jnflow::poe
