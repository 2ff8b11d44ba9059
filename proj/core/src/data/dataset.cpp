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

#include "jnf/data/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "jnf/error.hpp"
#include "jnf/io/archive.hpp"

namespace jnflow::data {

const char* to_string(LikelihoodFamily f) {
  switch (f) {
    case LikelihoodFamily::gaussian_unit_variance: return "gaussian_unit_variance";
    case LikelihoodFamily::bernoulli: return "bernoulli";
  }
  return "bernoulli";
}

LikelihoodFamily parse_likelihood_family(const std::string& name) {
  if (name == "gaussian_unit_variance" || name == "gaussian") return LikelihoodFamily::gaussian_unit_variance;
  if (name == "bernoulli") return LikelihoodFamily::bernoulli;
  throw Error(ErrorCode::invalid_config, "unknown likelihood family '" + name + "'");
}

int ModalitySpec::dim() const {
  return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<int>());
}

void ModalitySpec::validate() const {
  if (shape.empty() || shape.size() > 3) {
    throw Error(ErrorCode::invalid_config, "modality '" + name + "': shape must have 1 or 3 dimensions");
  }
  for (int d : shape) {
    if (d < 1) throw Error(ErrorCode::invalid_config, "modality '" + name + "': shape dimensions must be >= 1");
  }
}

MultimodalDataset::MultimodalDataset(std::vector<ModalitySpec> specs, std::vector<Matrix> modalities,
                                     std::vector<int> labels)
    : specs_(std::move(specs)), modalities_(std::move(modalities)), labels_(std::move(labels)) {
  if (specs_.size() != modalities_.size()) {
    throw Error(ErrorCode::shape_mismatch, "one matrix per modality spec is required");
  }
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    specs_[i].validate();
    if (modalities_[i].cols() != specs_[i].dim()) {
      throw Error(ErrorCode::shape_mismatch, "modality '" + specs_[i].name + "' has " +
                                                 std::to_string(modalities_[i].cols()) + " columns, spec says " +
                                                 std::to_string(specs_[i].dim()));
    }
    if (modalities_[i].rows() != modalities_[0].rows()) {
      throw Error(ErrorCode::shape_mismatch, "modalities have different sample counts");
    }
  }
  if (!labels_.empty() && labels_.size() != size()) {
    throw Error(ErrorCode::shape_mismatch, "label count differs from sample count");
  }
}

int MultimodalDataset::num_classes() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end()) + 1;
}

void MultimodalDataset::set_annotation(const std::string& name, std::vector<double> values) {
  if (values.size() != size()) throw Error(ErrorCode::shape_mismatch, "annotation '" + name + "' has wrong length");
  annotations_[name] = std::move(values);
}

const std::vector<double>& MultimodalDataset::annotation(const std::string& name) const {
  auto it = annotations_.find(name);
  if (it == annotations_.end()) throw Error(ErrorCode::invalid_argument, "no annotation named '" + name + "'");
  return it->second;
}

MultimodalSample MultimodalDataset::sample(std::size_t row) const {
  MultimodalSample s;
  for (const auto& m : modalities_) s.modalities.push_back(m.row(static_cast<Eigen::Index>(row)));
  if (has_labels()) s.shared_label = labels_[row];
  return s;
}

std::vector<Matrix> MultimodalDataset::gather(std::span<const std::size_t> rows) const {
  std::vector<Matrix> out;
  out.reserve(modalities_.size());
  for (const auto& m : modalities_) {
    Matrix g(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) g.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    out.push_back(std::move(g));
  }
  return out;
}

MultimodalDataset MultimodalDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> labels;
  if (has_labels()) {
    labels.reserve(rows.size());
    for (auto r : rows) labels.push_back(labels_[r]);
  }
  MultimodalDataset out(specs_, gather(rows), std::move(labels));
  for (const auto& [name, values] : annotations_) {
    std::vector<double> sub;
    sub.reserve(rows.size());
    for (auto r : rows) sub.push_back(values[r]);
    out.annotations_[name] = std::move(sub);
  }
  return out;
}

std::pair<MultimodalDataset, MultimodalDataset> MultimodalDataset::split(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::size_t> head(n), tail(size() - n);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), n);
  return {subset(head), subset(tail)};
}

std::string format_shape(const std::vector<int>& shape) {
  std::ostringstream s;
  for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? "," : "") << shape[i];
  return s.str();
}

std::vector<int> parse_shape(const std::string& text) {
  std::vector<int> shape;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) shape.push_back(std::stoi(tok));
  return shape;
}

void save_dataset(const std::filesystem::path& dir, const MultimodalDataset& ds, const std::string& provenance) {
  std::filesystem::create_directories(dir);
  io::Manifest m;
  m.set("format", "jnf-dataset-v1");
  m.set("provenance", provenance);
  m.set("n_samples", ds.size());
  m.set("n_modalities", ds.num_modalities());
  m.set("dtype", "float64");
  for (std::size_t i = 0; i < ds.num_modalities(); ++i) {
    const std::string p = "modality." + std::to_string(i) + ".";
    const auto& spec = ds.spec(i);
    m.set(p + "name", spec.name);
    m.set(p + "shape", format_shape(spec.shape));
    m.set(p + "likelihood", to_string(spec.likelihood));
    m.set(p + "file", "modality_" + std::to_string(i) + ".bin");
    io::write_matrix(dir / ("modality_" + std::to_string(i) + ".bin"), ds.modality(i));
  }
  if (ds.has_labels()) {
    m.set("labels.file", "labels.bin");
    m.set("labels.dtype", "int32");
    io::write_ints(dir / "labels.bin", ds.labels());
  }
  std::string names;
  for (const auto& [name, values] : ds.annotations()) {
    names += (names.empty() ? "" : ",") + name;
    Matrix col = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    io::write_matrix(dir / ("annotation_" + name + ".bin"), col);
  }
  m.set("annotations", names);
  m.save(dir / "manifest.txt");
}

MultimodalDataset load_dataset(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("format", "") != "jnf-dataset-v1") {
    throw Error(ErrorCode::io_error, dir.string() + ": not a jnf dataset directory");
  }
  if (m.get_or("dtype", "float64") != "float64") {
    throw Error(ErrorCode::io_error, dir.string() + ": unsupported dtype " + m.get("dtype"));
  }
  const auto n = static_cast<Eigen::Index>(m.get_int("n_samples"));
  const auto k = static_cast<std::size_t>(m.get_int("n_modalities"));
  std::vector<ModalitySpec> specs;
  std::vector<Matrix> mods;
  for (std::size_t i = 0; i < k; ++i) {
    const std::string p = "modality." + std::to_string(i) + ".";
    ModalitySpec spec{m.get(p + "name"), parse_shape(m.get(p + "shape")),
                      parse_likelihood_family(m.get(p + "likelihood"))};
    mods.push_back(io::read_matrix(dir / m.get(p + "file"), n, spec.dim()));
    specs.push_back(std::move(spec));
  }
  std::vector<int> labels;
  if (m.has("labels.file")) labels = io::read_ints(dir / m.get("labels.file"), static_cast<std::size_t>(n));
  MultimodalDataset ds(std::move(specs), std::move(mods), std::move(labels));
  const std::string names = m.get_or("annotations", "");
  std::istringstream in(names);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (name.empty()) continue;
    const Matrix col = io::read_matrix(dir / ("annotation_" + name + ".bin"), n, 1);
    ds.set_annotation(name, std::vector<double>(col.data(), col.data() + col.size()));
  }
  return ds;
}

}  // namespace jnflow::data
