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

#include "jnf/eval/classifier.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

#include "jnf/data/batching.hpp"
#include "jnf/error.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::eval {

Classifier::Classifier(data::ModalitySpec spec, int num_classes, const std::vector<int>& hidden, Rng& rng)
    : spec_(std::move(spec)), num_classes_(num_classes) {
  if (num_classes < 2) throw Error(ErrorCode::invalid_config, "a classifier needs at least two classes");
  std::vector<int> w{spec_.dim()};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(num_classes);
  net_ = nn::Mlp("classifier." + spec_.name, w, nn::Activation::relu, nn::Activation::identity, rng);
}

Matrix Classifier::logits(const Matrix& x) const {
  ad::FrozenParameters frozen;
  return net_(ad::constant(x)).value();
}

std::vector<int> Classifier::predict(const Matrix& x) const {
  const Matrix l = logits(x);
  std::vector<int> out(static_cast<std::size_t>(l.rows()));
  for (Eigen::Index r = 0; r < l.rows(); ++r) {
    Eigen::Index arg = 0;
    l.row(r).maxCoeff(&arg);
    out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return out;
}

Matrix Classifier::features(const Matrix& x) const {
  ad::FrozenParameters frozen;
  return net_.features(ad::constant(x)).value();
}

double Classifier::accuracy(const Matrix& x, const std::vector<int>& labels) const {
  return label_agreement(*this, x, labels);
}

void Classifier::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::Manifest m;
  m.set("kind", "classifier");
  m.set("num_classes", num_classes_);
  m.set("accuracy_on_test", accuracy_on_test_);
  std::vector<int> hidden(net_.widths().begin() + 1, net_.widths().end() - 1);
  m.set("hidden", vae::format_ints(hidden));
  vae::write_specs(m, "modality.", {spec_});
  io::save_parameters(dir, net_.parameters());
  m.save(dir / "manifest.txt");
}

Classifier Classifier::load(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("kind", "") != "classifier") throw Error(ErrorCode::io_error, dir.string() + ": not a classifier");
  Rng rng(0);
  Classifier c(vae::read_specs(m, "modality.").at(0), static_cast<int>(m.get_int("num_classes")),
               vae::parse_ints(m.get("hidden")), rng);
  io::load_parameters(dir, c.net_.parameters());
  c.accuracy_on_test_ = m.get_double("accuracy_on_test");
  return c;
}

Classifier train_classifier(const data::ModalitySpec& spec, const Matrix& x, const std::vector<int>& labels,
                            const ClassifierConfig& cfg) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows() || labels.empty()) {
    throw Error(ErrorCode::shape_mismatch, "classifier data and labels differ in length");
  }
  const int classes = std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  Rng rng = Rng::derive(cfg.train.seed, 8);
  Classifier clf(spec, classes, cfg.hidden, rng);

  const auto n = static_cast<std::size_t>(x.rows());
  auto n_test = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(n));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1 > 0 ? n - 1 : 1);
  const std::size_t n_train = n - n_test;

  if (cfg.train.epochs > 0) {
    nn::Adam opt(clf.net().parameters(), cfg.train.adam);
    const data::BatchIterator batches(n_train, static_cast<std::size_t>(cfg.train.batch_size),
                                      mix_seed(cfg.train.seed, 9));
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
      double total = 0.0;
      for (const auto& idx : batches.epoch(static_cast<std::size_t>(epoch))) {
        Matrix xb(static_cast<Eigen::Index>(idx.size()), x.cols());
        Matrix onehot = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), classes);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          xb.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
          onehot(static_cast<Eigen::Index>(r), labels[idx[r]]) = 1.0;
        }
        opt.zero_grad();
        const ad::Var logp = ad::log_softmax(clf.net()(ad::constant(xb)));
        const ad::Var loss = -ad::mean(ad::row_sum(logp * ad::constant(onehot)));
        ad::backward(loss);
        opt.step();
        total += loss.scalar() * static_cast<double>(idx.size());
      }
      if (cfg.train.on_epoch) cfg.train.on_epoch(epoch, total / static_cast<double>(n_train));
    }
  }
  const Matrix x_test = x.bottomRows(static_cast<Eigen::Index>(n_test));
  const std::vector<int> y_test(labels.end() - static_cast<std::ptrdiff_t>(n_test), labels.end());
  clf.set_accuracy_on_test(clf.accuracy(x_test, y_test));
  if (clf.accuracy_on_test() < cfg.accuracy_floor) {
    spdlog::warn("classifier '{}' held-out accuracy {:.4f} is below the floor {:.2f}; it will not be used for "
                 "coherence",
                 spec.name, clf.accuracy_on_test(), cfg.accuracy_floor);
  }
  return clf;
}

void require_usable(const Classifier& clf, double floor) {
  if (clf.accuracy_on_test() < floor) {
    throw Error(ErrorCode::accuracy_below_floor, "classifier '" + clf.spec().name + "' accuracy " +
                                                     std::to_string(clf.accuracy_on_test()) + " < floor " +
                                                     std::to_string(floor));
  }
}

double label_agreement(const Classifier& clf, const Matrix& generated, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != generated.rows()) {
    throw Error(ErrorCode::shape_mismatch, "generated rows and labels differ in length");
  }
  if (labels.empty()) return 0.0;
  const auto pred = clf.predict(generated);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double coherence(const Generator& generator, const Classifier& clf, const Matrix& sources,
                 const std::vector<int>& labels, int n_per_sample, Rng& rng, double accuracy_floor) {
  require_usable(clf, accuracy_floor);
  if (n_per_sample < 1) throw Error(ErrorCode::invalid_argument, "n_per_sample must be >= 1");
  double total = 0.0;
  for (int k = 0; k < n_per_sample; ++k) total += label_agreement(clf, generator(sources, rng), labels);
  return total / static_cast<double>(n_per_sample);
}

}  // namespace jnflow::eval
