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

#ifndef JNF_DATA_DATASET_HPP_
#define JNF_DATA_DATASET_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jnf/autodiff.hpp"

namespace jnflow::data {

enum class LikelihoodFamily { gaussian_unit_variance, bernoulli };

const char* to_string(LikelihoodFamily f);
LikelihoodFamily parse_likelihood_family(const std::string& name);

struct ModalitySpec {
  std::string name;
  /// (channels, height, width) for images or (attribute_count,) for vectors.
  std::vector<int> shape;
  LikelihoodFamily likelihood = LikelihoodFamily::bernoulli;

  /// Flattened dimension.
  int dim() const;
  void validate() const;
  bool operator==(const ModalitySpec&) const = default;
};

/// "1,28,28" <-> {1, 28, 28}.
std::string format_shape(const std::vector<int>& shape);
std::vector<int> parse_shape(const std::string& text);

struct MultimodalSample {
  std::vector<RowVector> modalities;
  std::optional<int> shared_label;
};

/// Column-major storage: modality i is an (n x dim_i) matrix whose rows are
/// samples.  Labels, when present, are shared by all modalities of a row.
/// Annotations carry per-sample side information (e.g. toy shape sizes).
class MultimodalDataset {
 public:
  MultimodalDataset() = default;
  MultimodalDataset(std::vector<ModalitySpec> specs, std::vector<Matrix> modalities, std::vector<int> labels = {});

  std::size_t size() const { return modalities_.empty() ? 0 : static_cast<std::size_t>(modalities_[0].rows()); }
  std::size_t num_modalities() const { return specs_.size(); }
  bool has_labels() const { return !labels_.empty(); }

  const std::vector<ModalitySpec>& specs() const { return specs_; }
  const ModalitySpec& spec(std::size_t i) const { return specs_[i]; }
  const Matrix& modality(std::size_t i) const { return modalities_[i]; }
  const std::vector<Matrix>& modalities() const { return modalities_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t row) const { return labels_.at(row); }
  int num_classes() const;

  void set_annotation(const std::string& name, std::vector<double> values);
  const std::vector<double>& annotation(const std::string& name) const;
  const std::map<std::string, std::vector<double>>& annotations() const { return annotations_; }

  MultimodalSample sample(std::size_t row) const;
  /// Rows gathered per modality, in the given order.
  std::vector<Matrix> gather(std::span<const std::size_t> rows) const;
  MultimodalDataset subset(std::span<const std::size_t> rows) const;
  /// First `n` rows and the remainder.
  std::pair<MultimodalDataset, MultimodalDataset> split(std::size_t n) const;

 private:
  std::vector<ModalitySpec> specs_;
  std::vector<Matrix> modalities_;
  std::vector<int> labels_;
  std::map<std::string, std::vector<double>> annotations_;
};

/// Directory layout: manifest.txt (key=value: modality specs, dtype, shapes,
/// provenance), modality_<i>.bin (float64 row-major), labels.bin (int32),
/// annotation_<name>.bin (float64).
void save_dataset(const std::filesystem::path& dir, const MultimodalDataset& ds, const std::string& provenance);
MultimodalDataset load_dataset(const std::filesystem::path& dir);

}  // namespace jnflow::data

#endif  // JNF_DATA_DATASET_HPP_
