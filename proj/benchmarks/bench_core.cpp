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

#include <benchmark/benchmark.h>

#include "jnf/autodiff.hpp"
#include "jnf/data/toy.hpp"
#include "jnf/dcca/cca.hpp"
#include "jnf/flow/made.hpp"
#include "jnf/nn.hpp"
#include "jnf/poe/hmc.hpp"
#include "jnf/random.hpp"
#include "jnf/vae/elbo.hpp"
#include "jnf/vae/joint_model.hpp"

namespace {

using namespace jnflow;

// Standard normal in d dimensions.
class StdNormal : public poe::LogTarget {
 public:
  explicit StdNormal(int d) : d_(d) {}
  ad::Var log_density(const ad::Var& z) const override { return ad::row_sum(ad::square(z)) * -0.5; }
  int dim() const override { return d_; }

 private:
  int d_;
};

void BM_MadeInverse(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  flow::MadeBlock block("made", d, 0, {64, 64}, rng);
  const Matrix v = rng.normal_matrix(256, d);
  const Matrix ctx(256, 0);
  ad::FrozenParameters frozen;
  for (auto _ : state) {
    auto r = block.inverse(ad::constant(v), ad::constant(ctx));
    benchmark::DoNotOptimize(r.out.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_MadeInverse)->Arg(2)->Arg(8)->Arg(32);

void BM_MadeForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(2);
  flow::MadeBlock block("made", d, 0, {64, 64}, rng);
  const Matrix u = rng.normal_matrix(256, d);
  const Matrix ctx(256, 0);
  ad::FrozenParameters frozen;
  for (auto _ : state) {
    auto r = block.forward(ad::constant(u), ad::constant(ctx));
    benchmark::DoNotOptimize(r.out.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_MadeForward)->Arg(2)->Arg(8)->Arg(32);

void BM_Leapfrog(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  StdNormal target(d);
  Rng rng(3);
  const Matrix z = rng.normal_matrix(8, d), v = rng.normal_matrix(8, d);
  for (auto _ : state) {
    auto s = poe::leapfrog(target, z, v, 0.05, 10);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Leapfrog)->Arg(2)->Arg(8);

void BM_TotalCorrelation(benchmark::State& state) {
  const int o = static_cast<int>(state.range(0));
  Rng rng(4);
  const Matrix h1 = rng.normal_matrix(800, o);
  const Matrix h2 = h1 + 0.5 * rng.normal_matrix(800, o);
  for (auto _ : state) {
    ad::Parameter p1("h1", h1);
    ad::Parameter p2("h2", h2);
    const ad::Var f = dcca::total_correlation(ad::param(p1), ad::param(p2), 1e-3);
    ad::backward(f);
    benchmark::DoNotOptimize(p1.grad.data());
  }
}
BENCHMARK(BM_TotalCorrelation)->Arg(4)->Arg(16);

void BM_ElboStep(benchmark::State& state) {
  data::ToyConfig tc;
  tc.n_samples = 128;
  const auto ds = data::generate_toy_dataset(tc);
  Rng rng(5);
  vae::JointModelConfig jc;
  vae::JointModel model(ds.specs(), jc, rng);
  nn::Adam opt(model.parameters(), nn::AdamConfig{});
  const auto batch = ds.modalities();
  for (auto _ : state) {
    opt.zero_grad();
    const auto terms = vae::elbo(model, batch, rng);
    ad::backward(terms.elbo * -1.0);
    opt.step();
    benchmark::DoNotOptimize(terms.elbo.scalar());
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ElboStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
