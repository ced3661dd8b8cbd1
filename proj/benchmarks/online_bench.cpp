// Copyright 2026 The ZDP Authors
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

#include "zdp/online.hpp"
#include "zdp/synth.hpp"

namespace {

void BM_OntStep(benchmark::State& state) {
  const auto d = state.range(0);
  const zdp::GramStream stream(zdp::StreamSpec::flat(d, d / 8, 16, 0.5, 1));
  auto tracker = zdp::ont_init_random(d, d / 8, 0.5, zdp::RngSpec{1, 5});
  const Eigen::MatrixXd batch = stream.batch(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::ont_step(tracker, batch));
  }
}
BENCHMARK(BM_OntStep)->RangeMultiplier(2)->Range(32, 512);

void BM_GramStreamBatch(benchmark::State& state) {
  const zdp::GramStream stream(zdp::StreamSpec::flat(state.range(0), 4, 16, 0.5, 1));
  std::uint64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stream.batch(++t));
  }
}
BENCHMARK(BM_GramStreamBatch)->Arg(32)->Arg(128);

void BM_RegretHarness(benchmark::State& state) {
  const auto spec = zdp::StreamSpec::flat(32, 4, 16, 0.5, 3);
  zdp::TrackerConfig cfg;
  cfg.c = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::regret_harness(spec, state.range(0), cfg));
  }
}
BENCHMARK(BM_RegretHarness)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
