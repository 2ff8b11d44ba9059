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

#ifndef JNF_EVAL_REPORT_HPP_
#define JNF_EVAL_REPORT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace jnflow::eval {

/// Metrics of one evaluated model.  Directional entries are keyed
/// "<target>|<source>" where source may be a '+'-joined subset.
struct EvalReport {
  std::string model_id;
  std::string dataset_id;
  std::uint64_t seed = 0;
  int n_is = 0;
  int n_mc = 0;
  std::optional<double> joint_ll;
  std::map<std::string, double> cond_ll;
  std::map<std::string, double> coherence;
  std::map<std::string, double> fid;
  std::optional<double> vi_bound_violation_rate;
  /// Free-form provenance: config hash, feature extractor, accuracies.
  std::map<std::string, std::string> metadata;

  bool empty() const;
  /// key=value record, one metric per line, keys sorted.
  std::string to_text() const;
  static EvalReport parse(const std::string& text);
};

}  // namespace jnflow::eval

#endif  // JNF_EVAL_REPORT_HPP_
