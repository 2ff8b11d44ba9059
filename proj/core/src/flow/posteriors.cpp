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

#include "jnf/flow/posteriors.hpp"

#include <algorithm>

#include "jnf/data/batching.hpp"
#include "jnf/error.hpp"
#include "jnf/vae/elbo.hpp"

namespace jnflow::flow {

const char* to_string(ConditioningMode mode) {
  return mode == ConditioningMode::dcca_embedding ? "dcca_embedding" : "raw_data";
}

ConditioningMode parse_conditioning_mode(const std::string& name) {
  if (name == "raw_data") return ConditioningMode::raw_data;
  if (name == "dcca_embedding") return ConditioningMode::dcca_embedding;
  throw Error(ErrorCode::invalid_config, "unknown conditioning mode '" + name + "'");
}

UnimodalPosteriorSet::UnimodalPosteriorSet(const std::vector<data::ModalitySpec>& specs, int latent_dim, FlowConfig cfg,
                                           ConditioningMode mode, Rng& rng, int dcca_dim)
    : mode_(mode), latent_dim_(latent_dim) {
  if (mode == ConditioningMode::dcca_embedding && dcca_dim < 1) {
    throw Error(ErrorCode::invalid_config, "dcca_embedding posteriors need a positive embedding dimension");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const int in = mode == ConditioningMode::dcca_embedding ? dcca_dim : specs[i].dim();
    stacks_.emplace_back("posterior" + std::to_string(i), in, latent_dim, cfg, rng);
  }
}

std::vector<ad::Parameter*> UnimodalPosteriorSet::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& s : stacks_) {
    auto p = s.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const ad::Parameter*> UnimodalPosteriorSet::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& s : stacks_) {
    auto p = s.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void UnimodalPosteriorSet::save(const std::filesystem::path& dir, const io::Manifest& extra) const {
  std::filesystem::create_directories(dir);
  io::Manifest m = extra;
  m.set("kind", "unimodal_posteriors");
  m.set("mode", to_string(mode_));
  m.set("latent_dim", latent_dim_);
  m.set("count", stacks_.size());
  for (std::size_t i = 0; i < stacks_.size(); ++i) stacks_[i].save(dir / ("modality_" + std::to_string(i)));
  m.save(dir / "manifest.txt");
}

UnimodalPosteriorSet UnimodalPosteriorSet::load(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("kind", "") != "unimodal_posteriors") {
    throw Error(ErrorCode::io_error, dir.string() + ": not a posterior set");
  }
  UnimodalPosteriorSet set;
  set.mode_ = parse_conditioning_mode(m.get("mode"));
  set.latent_dim_ = static_cast<int>(m.get_int("latent_dim"));
  const auto n = m.get_int("count");
  for (long long i = 0; i < n; ++i) set.stacks_.push_back(FlowStack::load(dir / ("modality_" + std::to_string(i))));
  return set;
}

Matrix conditioning_input(const UnimodalPosteriorSet& set, std::size_t modality, const Matrix& x,
                          const dcca::DccaProjectionSet* dcca) {
  if (set.mode() == ConditioningMode::raw_data) return x;
  if (dcca == nullptr) {
    throw Error(ErrorCode::conditioning_mode_mismatch, "posteriors are conditioned on DCCA embeddings but no DCCA "
                                                       "projection set was given");
  }
  return dcca::embed(*dcca, modality, x, set.posterior(modality).input_dim());
}

std::vector<Matrix> conditioning_inputs(const UnimodalPosteriorSet& set, const std::vector<Matrix>& xs,
                                        const dcca::DccaProjectionSet* dcca) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < set.size(); ++i) out.push_back(conditioning_input(set, i, xs.at(i), dcca));
  return out;
}

Var ljm_loss(const UnimodalPosteriorSet& set, const vae::JointModel& joint, const std::vector<Matrix>& batch,
             const std::vector<Matrix>& conditioning, const Matrix& eps) {
  const vae::DiagGaussian q = joint.encode(batch);
  const Var z = ad::detach(vae::reparameterize(q, eps));
  Var total;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Var lq = ad::mean(set.posterior(i).log_density(z, ad::constant(conditioning.at(i))));
    total = total.defined() ? total + lq : lq;
  }
  return -total;
}

Var ljm_loss(const UnimodalPosteriorSet& set, const vae::JointModel& joint, const std::vector<Matrix>& batch,
             const dcca::DccaProjectionSet* dcca, Rng& rng) {
  const auto cond = conditioning_inputs(set, batch, dcca);
  return ljm_loss(set, joint, batch, cond, rng.normal_matrix(batch.at(0).rows(), joint.latent_dim()));
}

std::vector<double> train_step2(UnimodalPosteriorSet& set, const vae::JointModel& joint,
                                const data::MultimodalDataset& dataset, const dcca::DccaProjectionSet* dcca,
                                const nn::TrainConfig& cfg) {
  std::vector<double> curve;
  if (cfg.epochs <= 0) return curve;
  // Conditioning inputs are fixed functions of the data; compute them once.
  const auto all_cond = conditioning_inputs(set, dataset.modalities(), dcca);
  nn::Adam opt(set.parameters(), cfg.adam);
  Rng rng = Rng::derive(cfg.seed, 4);
  const data::BatchIterator batches(dataset.size(), static_cast<std::size_t>(cfg.batch_size), mix_seed(cfg.seed, 5));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : batches.epoch(static_cast<std::size_t>(epoch))) {
      const auto xs = dataset.gather(idx);
      std::vector<Matrix> cond;
      for (const auto& c : all_cond) {
        Matrix g(static_cast<Eigen::Index>(idx.size()), c.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) g.row(static_cast<Eigen::Index>(r)) = c.row(static_cast<Eigen::Index>(idx[r]));
        cond.push_back(std::move(g));
      }
      opt.zero_grad();
      const Var loss = ljm_loss(set, joint, xs, cond, rng.normal_matrix(static_cast<Eigen::Index>(idx.size()), joint.latent_dim()));
      vae::check_finite_loss(loss.scalar(), "train-posteriors", epoch);
      ad::backward(loss);
      opt.step();
      total += loss.scalar() * static_cast<double>(idx.size());
    }
    const double mean = total / static_cast<double>(dataset.size());
    curve.push_back(mean);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
  }
  return curve;
}

OneStepResult train_jmvae_onestep(vae::JointModel& joint, UnimodalPosteriorSet& set,
                                  const data::MultimodalDataset& dataset, double alpha, int warmup_epochs,
                                  const nn::TrainConfig& cfg) {
  if (alpha < 0.0) throw Error(ErrorCode::invalid_config, "alpha must be >= 0");
  if (set.mode() != ConditioningMode::raw_data) {
    throw Error(ErrorCode::conditioning_mode_mismatch, "one-step training conditions posteriors on raw data");
  }
  OneStepResult result;
  if (cfg.epochs <= 0) return result;
  auto params = joint.parameters();
  if (alpha > 0.0) {
    auto p = set.parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  nn::Adam opt(params, cfg.adam);
  Rng rng = Rng::derive(cfg.seed, 6);
  const data::BatchIterator batches(dataset.size(), static_cast<std::size_t>(cfg.batch_size), mix_seed(cfg.seed, 7));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta =
        warmup_epochs > 0 ? std::min(1.0, static_cast<double>(epoch) / static_cast<double>(warmup_epochs)) : 1.0;
    double total = 0.0;
    double total_elbo = 0.0;
    for (const auto& idx : batches.epoch(static_cast<std::size_t>(epoch))) {
      const auto xs = dataset.gather(idx);
      opt.zero_grad();
      const vae::DiagGaussian q = joint.encode(xs);
      const Var z = vae::reparameterize(q, rng.normal_matrix(static_cast<Eigen::Index>(idx.size()), joint.latent_dim()));
      const Var rec = vae::weighted_log_likelihood(joint, xs, z);
      const Var kl = vae::kl_to_standard_normal(q);
      Var loss = -ad::mean(rec - kl * beta);
      if (alpha > 0.0) {
        const Var log_q = vae::log_density(q, z);
        Var ljm;
        for (std::size_t i = 0; i < set.size(); ++i) {
          const Var term = log_q - set.posterior(i).log_density(z, ad::constant(xs[i]));
          ljm = ljm.defined() ? ljm + term : term;
        }
        loss = loss + ad::mean(ljm) * alpha;
      }
      vae::check_finite_loss(loss.scalar(), "train-joint", epoch);
      ad::backward(loss);
      opt.step();
      total += loss.scalar() * static_cast<double>(idx.size());
      total_elbo += ad::mean(rec - kl).scalar() * static_cast<double>(idx.size());
    }
    const double n = static_cast<double>(dataset.size());
    result.loss.push_back(total / n);
    result.elbo.push_back(total_elbo / n);
    if (cfg.on_epoch) cfg.on_epoch(epoch, total / n);
  }
  return result;
}

}  // namespace jnflow::flow
