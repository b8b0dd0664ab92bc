// Copyright 2026 The midigap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "midigap/mixture.hpp"
#include "midigap/partition.hpp"
#include "midigap/synth.hpp"
#include "midigap/updating.hpp"
#include "midigap/vapor.hpp"

namespace {

using namespace midigap;

Dataset pose_data(int demos, int length, int modes) {
  SynthSpec spec;
  spec.family = SynthFamily::kMultiModePose;
  spec.n_demos = demos;
  spec.length = length;
  spec.noise = 0.01;
  spec.modes = modes;
  spec.seed = 1;
  return generate(spec);
}

void BM_FitPose(benchmark::State& state) {
  const Dataset data = pose_data(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit(data.demos));
  state.SetComplexityN(state.range(0) * state.range(1));
}
BENCHMARK(BM_FitPose)->Args({25, 100})->Args({50, 100})->Args({100, 100})->Args({100, 400})
    ->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

void BM_PartitionKMeans(benchmark::State& state) {
  const Dataset data = pose_data(static_cast<int>(state.range(0)), 100, 3);
  const VectorSet v = vectorize(data.demos, kDefaultSubsampleLength);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_kmeans_bic(v));
}
BENCHMARK(BM_PartitionKMeans)->Arg(15)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Regress(benchmark::State& state) {
  const Dataset data = pose_data(30, static_cast<int>(state.range(0)), 3);
  const MiDiGaP model = fit_mixture(data.demos, make_partition(data.labels, ClusterMethod::kKMeansBic, 20));
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(regress(model, rng));
}
BENCHMARK(BM_Regress)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_ConvexUpdate(benchmark::State& state) {
  const Dataset data = pose_data(15, 100, 3);
  const MiDiGaP model = fit_mixture(data.demos, make_partition(data.labels, ClusterMethod::kKMeansBic, 20));
  const Constraint reach(ReachSphere{Eigen::Vector3d::Zero(), 0.8});
  UpdateOptions options;
  options.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apply_convex(model, reach, options));
}
BENCHMARK(BM_ConvexUpdate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_OptimizePath(benchmark::State& state) {
  const Dataset data = pose_data(15, static_cast<int>(state.range(0)), 1);
  const DiGaP tube = fit(data.demos);
  const KinematicChain chain = builtin_chain("ur5");
  Eigen::VectorXd q0(6);
  q0 << 0.0, -1.2, 1.5, -1.9, -1.57, 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(optimize_path(chain, tube, q0));
}
BENCHMARK(BM_OptimizePath)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
