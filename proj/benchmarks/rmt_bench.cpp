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

#include "zdp/rmt.hpp"

namespace {

zdp::ThresholdSpec spec() {
  zdp::ThresholdSpec s;
  s.n = 100;
  s.d = 50;
  s.k = 4;
  return s;
}

void BM_Thresholds(benchmark::State& state) {
  const auto s = spec();
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::lm_numerator_threshold(s));
    benchmark::DoNotOptimize(zdp::mp_edge_threshold(s));
    benchmark::DoNotOptimize(zdp::snl_ratio_threshold(s));
  }
}
BENCHMARK(BM_Thresholds);

void BM_TailMc(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::tail_mc_validate(spec(), state.range(0), 7, 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TailMc)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
