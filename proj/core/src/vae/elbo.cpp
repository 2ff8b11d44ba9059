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

#include "jnf/vae/elbo.hpp"

#include <cmath>

#include "jnf/data/batching.hpp"
#include "jnf/error.hpp"

namespace jnflow::vae {

Var weighted_log_likelihood(const JointModel& model, const std::vector<Matrix>& batch, const Var& z) {
  Var total;
  for (std::size_t i = 0; i < model.num_modalities(); ++i) {
    const Var ll = log_likelihood(model.decode(i, z), batch[i], model.specs()[i].likelihood) *
                   model.reconstruction_weight(i);
    total = total.defined() ? total + ll : ll;
  }
  return total;
}

ElboTerms elbo(const JointModel& model, const std::vector<Matrix>& batch, const Matrix& eps, double kl_weight) {
  const DiagGaussian q = model.encode(batch);
  const Var z = reparameterize(q, eps);
  const Var rec = weighted_log_likelihood(model, batch, z);
  const Var kl = kl_to_standard_normal(q);
  const Var per = rec - kl * kl_weight;
  return {ad::mean(per), ad::mean(rec), ad::mean(kl), per.value()};
}

ElboTerms elbo(const JointModel& model, const std::vector<Matrix>& batch, Rng& rng, double kl_weight) {
  return elbo(model, batch, rng.normal_matrix(batch.at(0).rows(), model.latent_dim()), kl_weight);
}

void check_finite_loss(double value, const std::string& stage, int epoch) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::training_diverged, stage + ": non-finite loss at epoch " + std::to_string(epoch));
  }
}

std::vector<double> train_step1(JointModel& model, const data::MultimodalDataset& dataset, const nn::TrainConfig& cfg) {
  std::vector<double> curve;
  if (cfg.epochs <= 0) return curve;
  nn::Adam opt(model.parameters(), cfg.adam);
  Rng rng = Rng::derive(cfg.seed, 1);
  const data::BatchIterator batches(dataset.size(), static_cast<std::size_t>(cfg.batch_size), mix_seed(cfg.seed, 2));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : batches.epoch(static_cast<std::size_t>(epoch))) {
      const auto xs = dataset.gather(idx);
      opt.zero_grad();
      const ElboTerms t = elbo(model, xs, rng);
      check_finite_loss(t.elbo.scalar(), "train-joint", epoch);
      ad::backward(-t.elbo);
      opt.step();
      total += t.elbo.scalar() * static_cast<double>(idx.size());
    }
    const double mean = total / static_cast<double>(dataset.size());
    check_finite_loss(mean, "train-joint", epoch);
    curve.push_back(mean);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
  }
  return curve;
}

}  // namespace jnflow::vae
