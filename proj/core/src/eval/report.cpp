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

#include "jnf/eval/report.hpp"

#include "jnf/io/archive.hpp"

namespace jnflow::eval {

bool EvalReport::empty() const {
  return !joint_ll && cond_ll.empty() && coherence.empty() && fid.empty() && !vi_bound_violation_rate;
}

std::string EvalReport::to_text() const {
  io::Manifest m;
  m.set("schema", "jnf-eval-v1");
  m.set("model_id", model_id);
  m.set("dataset_id", dataset_id);
  m.set("seed", static_cast<long long>(seed));
  m.set("n_is", n_is);
  m.set("n_mc", n_mc);
  if (joint_ll) m.set("joint_ll", *joint_ll);
  for (const auto& [k, v] : cond_ll) m.set("cond_ll." + k, v);
  for (const auto& [k, v] : coherence) m.set("coherence." + k, v);
  for (const auto& [k, v] : fid) m.set("fid." + k, v);
  if (vi_bound_violation_rate) m.set("vi_bound_violation_rate", *vi_bound_violation_rate);
  for (const auto& [k, v] : metadata) m.set("meta." + k, v);
  return m.to_string();
}

EvalReport EvalReport::parse(const std::string& text) {
  const io::Manifest m = io::Manifest::parse(text);
  EvalReport r;
  r.model_id = m.get_or("model_id", "");
  r.dataset_id = m.get_or("dataset_id", "");
  r.seed = static_cast<std::uint64_t>(std::stoull(m.get_or("seed", "0")));
  r.n_is = std::stoi(m.get_or("n_is", "0"));
  r.n_mc = std::stoi(m.get_or("n_mc", "0"));
  if (m.has("joint_ll")) r.joint_ll = m.get_double("joint_ll");
  if (m.has("vi_bound_violation_rate")) r.vi_bound_violation_rate = m.get_double("vi_bound_violation_rate");
  auto take = [](const std::string& key, const std::string& prefix, std::string& rest) {
    if (key.rfind(prefix, 0) != 0) return false;
    rest = key.substr(prefix.size());
    return true;
  };
  for (const auto& [k, v] : m.entries()) {
    std::string rest;
    if (take(k, "cond_ll.", rest)) r.cond_ll[rest] = std::stod(v);
    else if (take(k, "coherence.", rest)) r.coherence[rest] = std::stod(v);
    else if (take(k, "fid.", rest)) r.fid[rest] = std::stod(v);
    else if (take(k, "meta.", rest)) r.metadata[rest] = v;
  }
  return r;
}

}  // namespace jnflow::eval
