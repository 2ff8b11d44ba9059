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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "jnf/error.hpp"
#include "jnf/experiment/config.hpp"
#include "jnf/experiment/pipeline.hpp"
#include "jnf/experiment/render.hpp"
#include "jnf/io/archive.hpp"

namespace jnflow::experiment {
namespace {

namespace fs = std::filesystem;

std::string tiny_config(const std::string& variant = "jnf") {
  std::string text =
      "dataset.kind = toy\n"
      "dataset.n_validation = 40\n"
      "dataset.n_test = 40\n"
      "toy.image_side = 10\n"
      "toy.size_min = 2\n"
      "toy.size_max = 4\n"
      "toy.n_samples = 160\n"
      "toy.seed = 3\n"
      "model.variant = " + variant + "\n"
      "model.latent_dim = 2\n"
      "joint.encoder_hidden = 16\n"
      "joint.decoder_hidden = 16\n"
      "flow.n_blocks = 1\n"
      "flow.hidden_layers = 8\n"
      "flow.encoder_hidden = 16\n"
      "training.epochs = 4\n"
      "training.batch_size = 32\n"
      "hmc.burn_in = 5\n"
      "hmc.samples_per_chain = 5\n"
      "hmc.chains = 2\n"
      "eval.n_is = 5\n"
      "eval.n_mc = 3\n"
      "eval.n_likelihood = 3\n"
      "eval.fid_samples = 40\n"
      "classifier.hidden = 16\n"
      "classifier.epochs = 2\n"
      "classifier.accuracy_floor = 0\n"
      "seed = 11\n";
  if (variant == "jnf_dcca") text += "dcca.output_dim = 3\ndcca.hidden = 8\ndcca.epochs = 2\ndcca.batch_size = 40\n";
  return text;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("jnf_experiment_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(ExperimentConfig, ParsesAndRoundTrips) {
  const auto cfg = ExperimentConfig::parse(tiny_config());
  cfg.validate();
  EXPECT_EQ(cfg.variant, Variant::jnf);
  EXPECT_EQ(cfg.dataset.toy.image_side, 10);
  EXPECT_EQ(cfg.encoder_hidden, std::vector<int>{16});
  const auto again = ExperimentConfig::parse(cfg.to_text());
  EXPECT_EQ(again.to_text(), cfg.to_text());
  EXPECT_EQ(again.hash(), cfg.hash());
}

TEST(ExperimentConfig, HashesTrackRelevantKeysOnly) {
  const auto a = ExperimentConfig::parse(tiny_config());
  auto b = ExperimentConfig::parse(tiny_config() + "flow.n_blocks = 3\n");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.joint_hash(), b.joint_hash());
  EXPECT_NE(a.posteriors_hash(), b.posteriors_hash());
  auto c = ExperimentConfig::parse(tiny_config() + "joint.encoder_hidden = 32\n");
  EXPECT_NE(a.joint_hash(), c.joint_hash());
  EXPECT_NE(a.posteriors_hash(), c.posteriors_hash());
  auto d = ExperimentConfig::parse(tiny_config() + "eval.n_is = 6\n");
  EXPECT_EQ(a.posteriors_hash(), d.posteriors_hash());
  EXPECT_NE(a.hash(), d.hash());
}

TEST(ExperimentConfig, GaussianVariantHasNoFlowBlocks) {
  const auto cfg = ExperimentConfig::parse(tiny_config("jmvae_gaussian"));
  EXPECT_EQ(cfg.flow_blocks(), 0);
  EXPECT_EQ(ExperimentConfig::parse(tiny_config()).flow_blocks(), 1);
}

TEST(ExperimentConfig, RejectsInvalidInput) {
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "model.colour = red\n"); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "training.lr = fast\n"); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "training.epochs = 0\n").validate(); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "hmc.chains = -1\n").validate(); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "toy.size_max = 5\n").validate(); }),
            ErrorCode::invalid_config);
}

TEST(ExperimentConfig, DccaSectionMatchesVariant) {
  EXPECT_NO_THROW(ExperimentConfig::parse(tiny_config("jnf_dcca")).validate());
  EXPECT_EQ(code_of([] {
              auto text = tiny_config();
              text.replace(text.find("model.variant = jnf"), 19, "model.variant = jnf_dcca");
              ExperimentConfig::parse(text).validate();
            }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "dcca.output_dim = 4\n").validate(); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { ExperimentConfig::parse(tiny_config() + "training.alpha = 0.5\n").validate(); }),
            ErrorCode::invalid_config);
  EXPECT_NO_THROW(ExperimentConfig::parse(tiny_config("jmvae_onestep") + "training.alpha = 0.5\n").validate());
}

TEST(Pipeline, LoadSplitsIsDeterministicAndSized) {
  const auto cfg = ExperimentConfig::parse(tiny_config());
  const auto a = load_splits(cfg);
  const auto b = load_splits(cfg);
  EXPECT_EQ(a.train.size(), 160u);
  EXPECT_EQ(a.validation.size(), 40u);
  EXPECT_EQ(a.test.size(), 40u);
  EXPECT_EQ(a.test.modality(0), b.test.modality(0));
}

TEST(Pipeline, InvalidConfigFailsBeforeWriting) {
  const fs::path dir = fresh_dir("invalid");
  auto cfg = ExperimentConfig::parse(tiny_config());
  cfg.training.epochs = 0;
  EXPECT_EQ(code_of([&] { run_pipeline(cfg, dir); }), ErrorCode::invalid_config);
  EXPECT_FALSE(fs::exists(dir / "checkpoints"));
}

class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fresh_dir("run"));
    record_ = new RunRecord(run_pipeline(ExperimentConfig::parse(tiny_config()), *dir_));
  }
  static void TearDownTestSuite() {
    delete record_;
    delete dir_;
  }
  static fs::path* dir_;
  static RunRecord* record_;
};
fs::path* PipelineRun::dir_ = nullptr;
RunRecord* PipelineRun::record_ = nullptr;

TEST_F(PipelineRun, WritesRunDirectoryLayout) {
  const fs::path& d = *dir_;
  EXPECT_TRUE(fs::exists(d / "config.txt"));
  for (const char* sub : {"joint", "posteriors", "classifiers"}) EXPECT_TRUE(fs::exists(d / "checkpoints" / sub)) << sub;
  EXPECT_TRUE(fs::exists(d / "metrics" / "report.txt"));
  EXPECT_FALSE(record_->report.empty());
  EXPECT_TRUE(record_->report.joint_ll.has_value());
  EXPECT_EQ(record_->report.coherence.size(), 2u);
  EXPECT_EQ(record_->loss_curves.at("joint").size(), 2u);
}

TEST_F(PipelineRun, RerunSkipsCompletedStages) {
  const auto rerun = run_pipeline(ExperimentConfig::parse(tiny_config()), *dir_);
  for (const auto& t : rerun.timings)
    if (t.stage != "data") {
      EXPECT_TRUE(t.resumed) << t.stage;
    }
  EXPECT_EQ(rerun.report.to_text(), record_->report.to_text());
}

TEST_F(PipelineRun, RetrainingPosteriorsLeavesJointUntouched) {
  const fs::path other = fresh_dir("isolation");
  fs::copy(*dir_, other, fs::copy_options::recursive);
  const fs::path joint_params = checkpoint_dir(other, Stage::joint) / "model" / "params.bin";
  ASSERT_TRUE(fs::exists(joint_params));
  const std::string before = slurp(joint_params);
  const auto rec = run_pipeline(ExperimentConfig::parse(tiny_config() + "flow.n_blocks = 2\n"), other);
  EXPECT_EQ(slurp(joint_params), before);
  bool joint_resumed = false, post_resumed = true;
  for (const auto& t : rec.timings) {
    if (t.stage == "joint") joint_resumed = t.resumed;
    if (t.stage == "posteriors") post_resumed = t.resumed;
  }
  EXPECT_TRUE(joint_resumed);
  EXPECT_FALSE(post_resumed);
}

TEST_F(PipelineRun, IdenticalConfigReproducesMetrics) {
  const fs::path other = fresh_dir("repeat");
  const auto rec = run_pipeline(ExperimentConfig::parse(tiny_config()), other);
  EXPECT_EQ(rec.report.to_text(), record_->report.to_text());
}

TEST_F(PipelineRun, RendersReport) {
  const fs::path out = fresh_dir("render");
  const auto files = render_report(RunRecord::load(*dir_), out);
  EXPECT_TRUE(fs::exists(out / "metrics" / "tables.txt"));
  EXPECT_TRUE(fs::exists(out / "plots" / "latent_scatter.png"));
  EXPECT_TRUE(fs::exists(out / "plots" / "loss_joint.png"));
  int grids = 0, densities = 0;
  for (const auto& f : files) {
    const auto n = f.filename().string();
    grids += n.rfind("generation_", 0) == 0;
    densities += n.rfind("density_", 0) == 0;
  }
  EXPECT_EQ(grids, 2);
  EXPECT_EQ(densities, 2);
}

TEST(Render, EmptyReportIsNoted) {
  const fs::path dir = fresh_dir("partial");
  PipelineOptions opts;
  opts.until = Stage::joint;
  const auto rec = run_pipeline(ExperimentConfig::parse(tiny_config()), dir, opts);
  EXPECT_TRUE(rec.report.empty());
  const fs::path out = fresh_dir("partial_render");
  render_report(rec, out);
  EXPECT_NE(slurp(out / "metrics" / "tables.txt").find("evaluation not run"), std::string::npos);
}

TEST(Sweep, FlowDepthSharesStepOne) {
  const fs::path out = fresh_dir("sweep");
  auto cfg = ExperimentConfig::parse(tiny_config());
  const auto rows = ablation_sweep(cfg, SweepAxis::flow_depth, {0, 1}, out);
  ASSERT_EQ(rows.size(), 2u);
  const auto a = slurp(checkpoint_dir(rows[0].run_dir, Stage::joint) / "model" / "params.bin");
  const auto b = slurp(checkpoint_dir(rows[1].run_dir, Stage::joint) / "model" / "params.bin");
  EXPECT_EQ(a, b);
  EXPECT_TRUE(fs::exists(out / "sweep.txt"));
  EXPECT_EQ(rows[0].report.metadata.at("flow_blocks"), "0");
}

}  // namespace
}  // namespace jnflow::experiment
