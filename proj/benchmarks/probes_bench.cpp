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

#include "zdp/probes.hpp"
#include "zdp/random.hpp"
#include "zdp/synth.hpp"

namespace {

void BM_ProbeReport(benchmark::State& state) {
  const auto d = state.range(0);
  const auto base = zdp::rank_deficient_base(4 * d, d, d / 2, zdp::RngSpec{4, 0});
  zdp::Philox gen(zdp::RngSpec{4, 1});
  const zdp::ActivationMatrix hh(base.h.data() + gen.normal_matrix(4 * d, d, 0.1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::probe_report(hh, base.null));
  }
}
BENCHMARK(BM_ProbeReport)->RangeMultiplier(2)->Range(16, 256);

void BM_Bina(benchmark::State& state) {
  const auto d = state.range(0);
  const auto base = zdp::rank_deficient_base(2 * d, d, d / 2, zdp::RngSpec{5, 0});
  zdp::Philox gen(zdp::RngSpec{5, 1});
  const Eigen::MatrixXd w = gen.normal_matrix(d, d);
  const zdp::DifferentiableMap linear{
      [w](const Eigen::VectorXd& x) -> Eigen::VectorXd { return w * x; },
      [w](const Eigen::VectorXd&) -> Eigen::MatrixXd { return w; }};
  const zdp::ScalarFunctional quad{
      [w](const Eigen::VectorXd& x) { return 0.5 * (w * x).squaredNorm(); },
      [w](const Eigen::VectorXd& x) -> Eigen::VectorXd { return w.transpose() * (w * x); }};
  zdp::BinaConfig cfg;
  cfg.objective = zdp::BinaObjective::score_functional;
  cfg.iterations = 50;
  const Eigen::VectorXd h = gen.normal_vector(d);
  const auto p = zdp::projector_from_basis(base.null);
  const auto q = zdp::Projector::identity(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zdp::bina(h, p, q, linear, cfg, &quad));
  }
}
BENCHMARK(BM_Bina)->Arg(16)->Arg(64);

}  // namespace
