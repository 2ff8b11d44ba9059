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

#ifndef JNF_DATA_PAIRING_HPP_
#define JNF_DATA_PAIRING_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jnf/data/dataset.hpp"

namespace jnflow::data {

/// One labelled modality, e.g. an external image collection.
struct LabeledDataset {
  ModalitySpec spec;
  Matrix data;
  std::vector<int> labels;
};

/// Builds a multimodal dataset by matching items with equal labels.
///
/// For each label l, n_l = min over datasets of the number of items carrying
/// l (optionally capped by max_per_class); the first n_l items of each
/// dataset are used.  Each of the `matches_per_item` rounds draws an
/// independent permutation of those items per dataset and pairs them
/// positionally, so every used item appears in exactly `matches_per_item`
/// tuples.  Output size is matches_per_item * sum_l n_l.
MultimodalDataset pair_by_label(const std::vector<LabeledDataset>& datasets, int matches_per_item,
                                std::uint64_t seed, std::optional<std::size_t> max_per_class = std::nullopt);

/// Directory with manifest.txt (name, shape, likelihood, n_samples),
/// data.bin (float64 row-major) and labels.bin (int32).
LabeledDataset load_labeled_dataset(const std::filesystem::path& dir);
void save_labeled_dataset(const std::filesystem::path& dir, const LabeledDataset& ds);

}  // namespace jnflow::data

#endif  // JNF_DATA_PAIRING_HPP_
