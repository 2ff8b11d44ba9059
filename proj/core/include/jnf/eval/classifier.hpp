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

#ifndef JNF_EVAL_CLASSIFIER_HPP_
#define JNF_EVAL_CLASSIFIER_HPP_

#include <filesystem>
#include <functional>
#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/nn.hpp"

namespace jnflow::eval {

struct ClassifierConfig {
  std::vector<int> hidden{128};
  nn::TrainConfig train{.epochs = 10, .batch_size = 128, .adam = {}, .seed = 0, .on_epoch = {}};
  double accuracy_floor = 0.9;
  /// Fraction of the data held out to measure accuracy.
  double holdout_fraction = 0.2;
};

/// Per-modality label predictor.  Its last hidden layer doubles as the
/// feature extractor for FID.
class Classifier {
 public:
  Classifier() = default;
  Classifier(data::ModalitySpec spec, int num_classes, const std::vector<int>& hidden, Rng& rng);

  Matrix logits(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
  Matrix features(const Matrix& x) const;
  double accuracy(const Matrix& x, const std::vector<int>& labels) const;

  const data::ModalitySpec& spec() const { return spec_; }
  int num_classes() const { return num_classes_; }
  /// Held-out accuracy measured by train_classifier.
  double accuracy_on_test() const { return accuracy_on_test_; }
  void set_accuracy_on_test(double a) { accuracy_on_test_ = a; }
  /// Identifies the feature extractor (architecture + weights).
  std::uint64_t hash() const { return nn::hash_parameters(net_.parameters()); }
  nn::Mlp& net() { return net_; }

  void save(const std::filesystem::path& dir) const;
  static Classifier load(const std::filesystem::path& dir);

 private:
  data::ModalitySpec spec_;
  int num_classes_ = 0;
  nn::Mlp net_;
  double accuracy_on_test_ = 0.0;
};

/// Trains on the first (1 - holdout) share of rows, records accuracy on the
/// rest.  Logs a warning when the accuracy is below the configured floor.
Classifier train_classifier(const data::ModalitySpec& spec, const Matrix& x, const std::vector<int>& labels,
                            const ClassifierConfig& cfg);

/// Throws accuracy_below_floor unless the classifier may judge coherence.
void require_usable(const Classifier& clf, double floor);

/// Maps a batch of source rows to one generated target row each.
using Generator = std::function<Matrix(const Matrix& sources, Rng& rng)>;

/// Fraction of generations whose predicted label equals the source label,
/// over every source row and n_per_sample draws.
double coherence(const Generator& generator, const Classifier& clf, const Matrix& sources,
                 const std::vector<int>& labels, int n_per_sample, Rng& rng, double accuracy_floor = 0.9);

/// Fraction of rows of `generated` classified as `labels`.
double label_agreement(const Classifier& clf, const Matrix& generated, const std::vector<int>& labels);

}  // namespace jnflow::eval

#endif  // JNF_EVAL_CLASSIFIER_HPP_
