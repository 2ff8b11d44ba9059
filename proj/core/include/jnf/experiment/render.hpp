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

#ifndef JNF_EXPERIMENT_RENDER_HPP_
#define JNF_EXPERIMENT_RENDER_HPP_

#include <filesystem>
#include <vector>

#include "jnf/experiment/pipeline.hpp"

namespace jnflow::experiment {

/// Writes metrics/tables.txt plus plots/: loss curves, a latent scatter of
/// 100 training pairs, posterior density heatmaps (latent_dim = 2 only) and
/// conditional generation grids (one source row, then generated rows).
/// Parts whose checkpoints are missing are skipped with a note.  Returns the
/// files written.
std::vector<std::filesystem::path> render_report(const RunRecord& record, const std::filesystem::path& out_dir);

/// Text table of the sweep plus coherence- and FID-vs-axis plots.
void write_sweep_outputs(SweepAxis axis, const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir);

/// Rows of the generation grid for one direction.
inline constexpr int kGridColumns = 8;
inline constexpr int kGridGeneratedRows = 4;

}  // namespace jnflow::experiment

#endif  // JNF_EXPERIMENT_RENDER_HPP_
