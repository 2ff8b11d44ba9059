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

#include "jnf/data/pairing.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "jnf/error.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/random.hpp"

namespace jnflow::data {

MultimodalDataset pair_by_label(const std::vector<LabeledDataset>& datasets, int matches_per_item,
                                std::uint64_t seed, std::optional<std::size_t> max_per_class) {
  if (datasets.empty()) throw Error(ErrorCode::invalid_argument, "pair_by_label: no datasets");
  if (matches_per_item < 1) throw Error(ErrorCode::invalid_argument, "pair_by_label: matches_per_item must be >= 1");

  std::vector<std::map<int, std::vector<std::size_t>>> by_label(datasets.size());
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& ds = datasets[d];
    if (static_cast<Eigen::Index>(ds.labels.size()) != ds.data.rows()) {
      throw Error(ErrorCode::shape_mismatch, "dataset '" + ds.spec.name + "': labels and rows differ");
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) by_label[d][ds.labels[i]].push_back(i);
  }

  std::set<int> all_labels;
  for (const auto& m : by_label)
    for (const auto& [l, _] : m) all_labels.insert(l);
  for (std::size_t a = 0; a < datasets.size(); ++a) {
    for (std::size_t b = a + 1; b < datasets.size(); ++b) {
      const bool disjoint = std::none_of(by_label[a].begin(), by_label[a].end(),
                                         [&](const auto& kv) { return by_label[b].count(kv.first) != 0; });
      if (disjoint) {
        throw Error(ErrorCode::label_mismatch,
                    "datasets '" + datasets[a].spec.name + "' and '" + datasets[b].spec.name + "' share no label");
      }
    }
  }
  for (int l : all_labels) {
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      if (by_label[d].count(l) == 0) {
        throw Error(ErrorCode::empty_class,
                    "dataset '" + datasets[d].spec.name + "' has no item with label " + std::to_string(l));
      }
    }
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> rows(datasets.size());
  std::vector<int> labels;
  for (int l : all_labels) {
    std::size_t n = by_label[0][l].size();
    for (const auto& m : by_label) n = std::min(n, m.at(l).size());
    if (max_per_class) n = std::min(n, *max_per_class);
    for (int round = 0; round < matches_per_item; ++round) {
      for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto& items = by_label[d][l];
        for (std::size_t k : rng.permutation(n)) rows[d].push_back(items[k]);
      }
      labels.insert(labels.end(), n, l);
    }
  }

  std::vector<ModalitySpec> specs;
  std::vector<Matrix> mods;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& src = datasets[d].data;
    Matrix out(static_cast<Eigen::Index>(rows[d].size()), src.cols());
    for (std::size_t r = 0; r < rows[d].size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(rows[d][r]));
    specs.push_back(datasets[d].spec);
    mods.push_back(std::move(out));
  }
  MultimodalDataset result(std::move(specs), std::move(mods), std::move(labels));
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    std::vector<double> src_index(rows[d].begin(), rows[d].end());
    result.set_annotation("source_index_" + std::to_string(d), std::move(src_index));
  }
  return result;
}

LabeledDataset load_labeled_dataset(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  LabeledDataset ds;
  ds.spec.name = m.get("name");
  ds.spec.shape = parse_shape(m.get("shape"));
  ds.spec.likelihood = parse_likelihood_family(m.get("likelihood"));
  ds.spec.validate();
  const auto n = static_cast<Eigen::Index>(m.get_int("n_samples"));
  ds.data = io::read_matrix(dir / m.get_or("file", "data.bin"), n, ds.spec.dim());
  ds.labels = io::read_ints(dir / m.get_or("labels.file", "labels.bin"), static_cast<std::size_t>(n));
  return ds;
}

void save_labeled_dataset(const std::filesystem::path& dir, const LabeledDataset& ds) {
  io::Manifest m;
  m.set("name", ds.spec.name);
  m.set("shape", format_shape(ds.spec.shape));
  m.set("likelihood", to_string(ds.spec.likelihood));
  m.set("n_samples", static_cast<long long>(ds.data.rows()));
  m.set("dtype", "float64");
  m.set("file", "data.bin");
  m.set("labels.file", "labels.bin");
  io::write_matrix(dir / "data.bin", ds.data);
  io::write_ints(dir / "labels.bin", ds.labels);
  m.save(dir / "manifest.txt");
}

}  // namespace jnflow::data
