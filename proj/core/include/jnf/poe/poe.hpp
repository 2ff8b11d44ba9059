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

#ifndef JNF_POE_POE_HPP_
#define JNF_POE_POE_HPP_

#include <optional>
#include <vector>

#include "jnf/flow/flow_stack.hpp"
#include "jnf/poe/hmc.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::poe {

/// log f(z) = sum_{i in S} log q_i(z | c_i) - (|S| - 1) log N(z; 0, I).
/// Experts are borrowed; they must outlive the target.
class PoeTarget : public LogTarget {
 public:
  explicit PoeTarget(int dim) : dim_(dim) {}

  /// `conditioning` is a single row c_i.
  void add_expert(const flow::FlowStack& expert, const RowVector& conditioning);

  Var log_density(const Var& z) const override;
  int dim() const override { return dim_; }
  std::size_t subset_size() const { return experts_.size(); }

 private:
  struct Expert {
    const flow::FlowStack* stack;
    RowVector conditioning;
  };
  int dim_;
  std::vector<Expert> experts_;
};

/// Decodes n latent draws of the PoE posterior through p(x_j | z).  Draws
/// are spread evenly over all chains and samples.  Returns likelihood means,
/// or likelihood samples when `likelihood_rng` is given.
Matrix conditional_generate_subset(const vae::JointModel& joint, const PoeTarget& target, const HmcConfig& cfg,
                                   std::size_t modality, int n, Rng* likelihood_rng = nullptr);

/// Decodes latent rows through modality j: means, or samples when `rng` set.
Matrix decode_latents(const vae::JointModel& joint, std::size_t modality, const Matrix& z, Rng* rng = nullptr);

}  // namespace jnflow::poe

#endif  // JNF_POE_POE_HPP_
