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

#include "jnf/dcca/projection.hpp"

#include <spdlog/spdlog.h>

#include "jnf/data/batching.hpp"
#include "jnf/error.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/vae/elbo.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::dcca {

DccaProjectionSet::DccaProjectionSet(const std::vector<data::ModalitySpec>& specs, DccaConfig cfg, Rng& rng)
    : specs_(specs), cfg_(std::move(cfg)) {
  if (specs_.size() < 2) throw Error(ErrorCode::invalid_config, "DCCA needs at least two modalities");
  if (cfg_.output_dim < 1) throw Error(ErrorCode::invalid_config, "dcca.output_dim must be >= 1");
  if (!(cfg_.regularizer > 0.0)) throw Error(ErrorCode::invalid_config, "dcca.regularizer must be positive");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    std::vector<int> w{specs_[i].dim()};
    w.insert(w.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    w.push_back(cfg_.output_dim);
    encoders_.emplace_back("dcca.g" + std::to_string(i), w, cfg_.activation, nn::Activation::identity, rng);
  }
  d_keep_ = cfg_.output_dim;
}

ad::Var DccaProjectionSet::raw(std::size_t modality, const Matrix& x) const {
  return encoders_.at(modality)(ad::constant(x));
}

void DccaProjectionSet::fit_rotation(const std::vector<Matrix>& xs) {
  const std::size_t m = encoders_.size();
  std::vector<Matrix> h;
  means_.clear();
  for (std::size_t i = 0; i < m; ++i) {
    h.push_back(raw(i, xs.at(i)).value());
    means_.push_back(h.back().colwise().mean());
  }
  rotations_.assign(m, Matrix());
  spectra_.clear();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const CcaResult res = total_correlation(covariance_triple(h[i], h[j], cfg_.regularizer));
      spectra_.push_back(res.singular_values);
      if (i == 0) {
        if (j == 1) rotations_[0] = res.whiten_1 * res.u;
        rotations_[j] = res.whiten_2 * res.v;
      }
    }
  }
  if (d_keep_ == 0) d_keep_ = cfg_.output_dim;
}

void DccaProjectionSet::set_d_keep(int k) {
  if (k < 1 || k > cfg_.output_dim) {
    throw Error(ErrorCode::invalid_config, "d_keep must lie in [1, " + std::to_string(cfg_.output_dim) + "]");
  }
  d_keep_ = k;
}

std::vector<ad::Parameter*> DccaProjectionSet::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& e : encoders_) {
    auto p = e.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const ad::Parameter*> DccaProjectionSet::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& e : encoders_) {
    auto p = e.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void DccaProjectionSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::Manifest m;
  m.set("kind", "dcca");
  m.set("output_dim", cfg_.output_dim);
  m.set("hidden", vae::format_ints(cfg_.hidden));
  m.set("activation", nn::to_string(cfg_.activation));
  m.set("regularizer", cfg_.regularizer);
  m.set("d_keep", d_keep_);
  m.set("fitted", fitted() ? 1 : 0);
  vae::write_specs(m, "modality.", specs_);
  io::save_parameters(dir, parameters());
  if (fitted()) {
    for (std::size_t i = 0; i < encoders_.size(); ++i) {
      io::write_matrix(dir / ("mean_" + std::to_string(i) + ".bin"), means_[i]);
      io::write_matrix(dir / ("rotation_" + std::to_string(i) + ".bin"), rotations_[i]);
    }
    m.set("n_spectra", spectra_.size());
    for (std::size_t k = 0; k < spectra_.size(); ++k) {
      io::write_matrix(dir / ("spectrum_" + std::to_string(k) + ".bin"), spectra_[k]);
      std::vector<double> values(spectra_[k].data(), spectra_[k].data() + spectra_[k].size());
      m.set("spectrum." + std::to_string(k), vae::format_doubles(values));
    }
  }
  m.save(dir / "manifest.txt");
}

DccaProjectionSet DccaProjectionSet::load(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("kind", "") != "dcca") throw Error(ErrorCode::io_error, dir.string() + ": not a DCCA checkpoint");
  DccaConfig cfg;
  cfg.output_dim = static_cast<int>(m.get_int("output_dim"));
  cfg.hidden = vae::parse_ints(m.get("hidden"));
  cfg.activation = nn::parse_activation(m.get("activation"));
  cfg.regularizer = m.get_double("regularizer");
  Rng rng(0);
  DccaProjectionSet set(vae::read_specs(m, "modality."), cfg, rng);
  io::load_parameters(dir, set.parameters());
  set.d_keep_ = static_cast<int>(m.get_int("d_keep"));
  if (m.get_int("fitted") != 0) {
    const auto o = static_cast<Eigen::Index>(cfg.output_dim);
    for (std::size_t i = 0; i < set.encoders_.size(); ++i) {
      set.means_.push_back(io::read_matrix(dir / ("mean_" + std::to_string(i) + ".bin"), 1, o));
      set.rotations_.push_back(io::read_matrix(dir / ("rotation_" + std::to_string(i) + ".bin"), o, o));
    }
    const auto n = static_cast<std::size_t>(m.get_int("n_spectra"));
    for (std::size_t k = 0; k < n; ++k) {
      set.spectra_.push_back(io::read_matrix(dir / ("spectrum_" + std::to_string(k) + ".bin"), o, 1));
    }
  }
  return set;
}

ad::Var dcca_loss(const DccaProjectionSet& set, const std::vector<Matrix>& batch) {
  const std::size_t m = set.num_modalities();
  std::vector<ad::Var> h;
  for (std::size_t i = 0; i < m; ++i) h.push_back(set.raw(i, batch.at(i)));
  ad::Var total;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const ad::Var f = total_correlation(h[i], h[j], set.config().regularizer);
      total = total.defined() ? total + f : f;
    }
  }
  return -total;
}

std::vector<double> train_dcca(DccaProjectionSet& set, const data::MultimodalDataset& train,
                               const data::MultimodalDataset& validation, const nn::TrainConfig& cfg) {
  std::vector<double> curve;
  if (cfg.epochs > 0) {
    nn::Adam opt(set.parameters(), cfg.adam);
    const data::BatchIterator batches(train.size(), static_cast<std::size_t>(cfg.batch_size), mix_seed(cfg.seed, 3));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      double total = 0.0;
      std::size_t counted = 0;
      for (const auto& idx : batches.epoch(static_cast<std::size_t>(epoch))) {
        // A trailing batch too small for covariance estimation is skipped.
        if (static_cast<int>(idx.size()) <= set.output_dim()) continue;
        const auto xs = train.gather(idx);
        opt.zero_grad();
        const ad::Var loss = dcca_loss(set, xs);
        vae::check_finite_loss(loss.scalar(), "train-dcca", epoch);
        ad::backward(loss);
        opt.step();
        total += loss.scalar() * static_cast<double>(idx.size());
        counted += idx.size();
      }
      if (counted == 0) {
        throw Error(ErrorCode::batch_too_small, "no DCCA batch exceeds output_dim samples");
      }
      const double mean = total / static_cast<double>(counted);
      curve.push_back(mean);
      if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
    }
  }
  set.fit_rotation(validation.modalities());
  for (const auto& s : set.pair_spectra()) {
    if (!s.allFinite()) throw Error(ErrorCode::training_diverged, "DCCA spectrum is not finite");
  }
  return curve;
}

int select_embedding_dim(const Vector& spectrum, const DimPolicy& policy) {
  const int n = static_cast<int>(spectrum.size());
  if (n == 0) return 0;
  if (policy.kind == DimPolicy::Kind::fixed) {
    if (policy.k > n) {
      spdlog::warn("requested {} DCCA dimensions but the spectrum has {}; keeping {}", policy.k, n, n);
      return n;
    }
    return std::max(policy.k, 1);
  }
  const double tau = policy.tau_fraction * spectrum.maxCoeff();
  int keep = 0;
  for (int i = 0; i < n; ++i) {
    if (spectrum(i) > tau) ++keep;
  }
  return std::max(keep, 1);
}

Matrix embed(const DccaProjectionSet& set, std::size_t modality, const Matrix& x, std::optional<int> d_keep) {
  if (!set.fitted()) throw Error(ErrorCode::invalid_argument, "DCCA rotation has not been fitted");
  const int k = d_keep.value_or(set.d_keep_);
  if (k < 1 || k > set.output_dim()) throw Error(ErrorCode::invalid_argument, "d_keep out of range");
  const Matrix h = set.raw(modality, x).value();
  const Matrix rotated = (h.rowwise() - set.means_.at(modality)) * set.rotations_.at(modality);
  return rotated.leftCols(k);
}

}  // namespace jnflow::dcca
