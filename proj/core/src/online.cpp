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
#include "zdp/online.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "zdp/error.hpp"
#include "zdp/probes.hpp"
#include "zdp/synth.hpp"

namespace zdp {

using Eigen::Index;
using Eigen::MatrixXd;

StreamSpec StreamSpec::flat(Index d, Index k, Index m, double delta, std::uint64_t seed) {
  StreamSpec s;
  s.d = d;
  s.k = k;
  s.batch_rows = m;
  s.eigengap = delta;
  s.seed = seed;
  if (d > k && k >= 0) s.spectrum.assign(static_cast<std::size_t>(d - k), delta);
  return s;
}

void StreamSpec::validate() const {
  detail::require(d >= 2, "stream: d must be >= 2");
  detail::require(k >= 1 && k < d, "stream: need 1 <= k < d");
  detail::require(static_cast<Index>(spectrum.size()) == d - k,
                  "stream: spectrum must list exactly d - k nonzero eigenvalues");
  detail::require(eigengap > 0.0, "stream: eigengap must be > 0");
  for (double l : spectrum) {
    detail::require(std::isfinite(l) && l >= eigengap,
                    "stream: every nonzero eigenvalue must be >= the eigengap");
  }
  detail::require(batch_rows >= 1, "stream: batch rows must be >= 1");
  detail::require(tau2 >= 0.0, "stream: tau2 must be >= 0");
}

double StreamSpec::sigma_norm() const {
  return spectrum.empty() ? 0.0 : *std::max_element(spectrum.begin(), spectrum.end());
}

double max_step_constant(double sigma_norm) {
  detail::require(sigma_norm > 0.0, "max_step_constant: ||Sigma|| must be > 0");
  return 1.0 / (4.0 * sigma_norm);
}

bool step_constant_respects_cap(double c, double sigma_norm) {
  return c > 0.0 && c <= max_step_constant(sigma_norm) * (1.0 + 1e-12);
}

TrackerState ont_init_random(Index d, Index k, double c, RngSpec rng) {
  detail::require(k >= 1 && k <= d, "ont_init: need 1 <= k <= d");
  detail::require(c > 0.0, "ont_init: step constant must be > 0");
  Philox gen(rng);
  TrackerState s;
  s.basis = haar_orthonormal(d, k, gen);
  s.c = c;
  s.k = k;
  return s;
}

TrackerState ont_init_warm(const MatrixXd& basis, double c) {
  detail::require(basis.cols() >= 1 && basis.cols() <= basis.rows(), "ont_init: need 1 <= k <= d");
  detail::require(orthonormality_error(basis) <= 1e-10, "ont_init: warm basis not orthonormal");
  detail::require(c > 0.0, "ont_init: step constant must be > 0");
  TrackerState s;
  s.basis = basis;
  s.c = c;
  s.k = basis.cols();
  return s;
}

double ont_step(TrackerState& state, const MatrixXd& batch, Deflation deflation) {
  detail::require(batch.cols() == state.basis.rows(), "ont_step: batch width does not match d");
  detail::require(batch.allFinite(), "ont_step: batch contains NaN or Inf");
  const std::uint64_t t = state.t + 1;
  const double eta = state.c / static_cast<double>(t);
  const MatrixXd& v = state.basis;
  const MatrixXd gv = batch.transpose() * (batch * v);
  MatrixXd next;
  if (deflation == Deflation::update) {
    next = v - eta * (gv - v * (v.transpose() * gv));
  } else {
    next = v - eta * gv;
    next -= v * (v.transpose() * next);
  }
  // v has unit columns, so a column this short has lost its direction.
  const double shortest = next.colwise().norm().minCoeff();
  if (!(shortest > 1e-8)) {
    throw NumericalError("ont_step: basis collapsed at step " + std::to_string(t) +
                         " (shortest column " + std::to_string(shortest) + ")");
  }
  state.basis = thin_q(next);
  state.t = t;
  const double m = static_cast<double>(batch.rows());
  const double score = (batch * state.basis).squaredNorm() / (m * static_cast<double>(state.k));
  state.score_history.push_back(score);
  return score;
}

void OnalConfig::validate() const {
  detail::require(c > 0.0, "onal: step constant must be > 0");
  detail::require(clip >= 0.0, "onal: clip must be >= 0");
  detail::require(reorth_period >= 0, "onal: reorthonormalisation period must be >= 0");
}

OnalState onal_init(std::vector<Projector> projectors, Index r, double init_scale,
                    const OnalConfig& config, RngSpec rng) {
  config.validate();
  detail::require(init_scale >= 0.0, "onal_init: init scale must be >= 0");
  OnalState s;
  s.config = config;
  Philox gen(rng);
  for (auto& p : projectors) {
    MatrixXd a = p.matrix() * gen.normal_matrix(p.dim(), r, init_scale);
    MatrixXd b = p.matrix() * gen.normal_matrix(p.dim(), r, init_scale);
    s.layers.push_back(OnalLayer{LoraFactors(std::move(a), std::move(b)), std::move(p)});
  }
  return s;
}

namespace {

void clip_in_place(MatrixXd& g, double lambda) {
  if (lambda <= 0.0) return;
  const double norm = g.norm();
  if (norm > lambda) g *= lambda / norm;
}

MatrixXd qr_recompose(const MatrixXd& m) {
  Eigen::HouseholderQR<MatrixXd> qr(m);
  const Index r = m.cols();
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(m.rows(), r);
  const MatrixXd rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return q * rr;
}

}  // namespace

void onal_step(OnalState& state, std::span<const LayerGradients> grads) {
  detail::require(grads.size() == state.layers.size(), "onal_step: one gradient pair per layer");
  const std::uint64_t t = state.t + 1;
  const double eta = state.config.c / static_cast<double>(t);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    OnalLayer& layer = state.layers[l];
    const LayerGradients& g = grads[l];
    MatrixXd& a = layer.factors.mutable_a();
    MatrixXd& b = layer.factors.mutable_b();
    detail::require(g.grad_a.rows() == a.rows() && g.grad_a.cols() == a.cols() &&
                        g.grad_b.rows() == b.rows() && g.grad_b.cols() == b.cols(),
                    "onal_step: gradient shape does not match factors");
    if (!g.grad_a.allFinite() || !g.grad_b.allFinite()) {
      throw NumericalError("onal_step: non-finite gradient");
    }
    const MatrixXd& p = layer.projector.matrix();
    MatrixXd ga = p * g.grad_a;
    MatrixXd gb = p * g.grad_b;
    clip_in_place(ga, state.config.clip);
    clip_in_place(gb, state.config.clip);
    a -= eta * ga;
    b -= eta * gb;
    a = p * a;
    b = p * b;
    const Index period = state.config.reorth_period;
    if (period > 0 && t % static_cast<std::uint64_t>(period) == 0) {
      a = qr_recompose(a);
      b = qr_recompose(b);
    }
  }
  state.t = t;
}

double containment_error(const OnalLayer& layer) {
  const MatrixXd& p = layer.projector.matrix();
  auto rel = [&](const MatrixXd& m) {
    const double norm = m.norm();
    return norm > 0.0 ? (m - p * m).norm() / norm : 0.0;
  };
  return std::max(rel(layer.factors.a()), rel(layer.factors.b()));
}

double surrogate_loss(const LoraFactors& f, const MatrixXd& target) {
  return 0.5 * (f.update() - target).squaredNorm();
}

LayerGradients surrogate_gradients(const LoraFactors& f, const MatrixXd& target) {
  const MatrixXd resid = f.update() - target;
  return LayerGradients{resid * f.b(), resid.transpose() * f.a()};
}

OnalRunResult run_onal_surrogate(const MatrixXd& base, const NullBasis& true_null,
                                 const Projector& projector, const MatrixXd& target, Index r,
                                 Index steps, const OnalConfig& config, RngSpec rng) {
  detail::require(base.cols() == projector.dim() && target.rows() == projector.dim() &&
                      target.cols() == projector.dim(),
                  "run_onal_surrogate: dimension mismatch");
  detail::require(steps >= 0, "run_onal_surrogate: steps must be >= 0");
  OnalState state = onal_init({projector}, r, 0.1, config, rng);
  OnalRunResult out{state.layers[0].factors, {}, {}, 0.0, 0.0, 0.0, 0.0};
  out.initial_loss = surrogate_loss(state.layers[0].factors, target);
  for (Index s = 0; s < steps; ++s) {
    const LayerGradients g = surrogate_gradients(state.layers[0].factors, target);
    onal_step(state, std::span<const LayerGradients>(&g, 1));
    out.max_containment_error = std::max(out.max_containment_error, containment_error(state.layers[0]));
  }
  out.factors = state.layers[0].factors;
  out.final_loss = surrogate_loss(out.factors, target);
  out.delta_h = base * out.factors.update();
  out.h_hat = base + out.delta_h;
  out.snl = snl(ActivationMatrix(out.h_hat), true_null);
  return out;
}

stats::LineFit fit_log_regret(std::span<const double> cumulative) {
  const std::size_t T = cumulative.size();
  detail::require(T >= 10, "fit_log_regret: need at least 10 steps");
  const std::size_t first = std::max<std::size_t>(1, (T + 9) / 10);
  std::vector<double> x, y;
  for (std::size_t t = first; t <= T; ++t) {
    x.push_back(std::log(static_cast<double>(t)));
    y.push_back(cumulative[t - 1]);
  }
  return stats::fit_line(x, y);
}

double fit_inverse_t(std::span<const double> gaps) {
  const std::size_t T = gaps.size();
  detail::require(T >= 10, "fit_inverse_t: need at least 10 steps");
  const std::size_t first = std::max<std::size_t>(1, (T + 9) / 10);
  std::vector<double> x, y;
  for (std::size_t t = first; t <= T; ++t) {
    x.push_back(1.0 / static_cast<double>(t));
    y.push_back(gaps[t - 1]);
  }
  return stats::fit_through_origin(x, y);
}

RegretResult regret_harness(const StreamSpec& spec, Index steps, const TrackerConfig& config) {
  detail::require(steps >= 10, "regret_harness: need at least 10 steps");
  const GramStream stream(spec);
  RegretResult out;
  out.step_cap_respected = step_constant_respects_cap(config.c, spec.sigma_norm());
  if (!out.step_cap_respected) {
    out.warning = "step constant c exceeds 1/(4||Sigma||_2); running anyway";
  }
  TrackerState state = config.init == TrackerInit::warm
                           ? ont_init_warm(stream.null_basis(), config.c)
                           : ont_init_random(spec.d, spec.k, config.c, RngSpec{config.init_seed, 5});
  const MatrixXd& v0 = stream.null_basis();
  const double mk = static_cast<double>(spec.batch_rows) * static_cast<double>(spec.k);
  const std::uint64_t tau_window = std::min<std::uint64_t>(static_cast<std::uint64_t>(steps), 512);
  std::vector<double> deviations;
  deviations.reserve(tau_window);

  double cumulative = 0.0;
  for (Index i = 1; i <= steps; ++i) {
    const MatrixXd h = stream.batch(static_cast<std::uint64_t>(i));
    const double score = ont_step(state, h, config.deflation);
    const double oracle = (h * v0).squaredNorm() / mk;
    const double gap = score - oracle;
    cumulative += gap;
    out.scores.push_back(score);
    out.oracle_scores.push_back(oracle);
    out.gaps.push_back(gap);
    out.cumulative.push_back(cumulative);
    if (static_cast<std::uint64_t>(i) <= tau_window) {
      const MatrixXd dev = symmetrized(h.transpose() * h - stream.sigma());
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(dev, Eigen::EigenvaluesOnly);
      deviations.push_back(eig.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  out.log_fit = fit_log_regret(out.cumulative);
  out.c_hat = fit_inverse_t(out.gaps);
  out.tau2_hat = fit_subexponential_tau2(deviations);
  out.final_sin_theta = sin_theta_distance(v0, state.basis);
  return out;
}

MultiSeedRegret regret_harness_multi(const StreamSpec& spec, Index steps,
                                     const TrackerConfig& config,
                                     std::span<const std::uint64_t> seeds, unsigned threads) {
  detail::require(!seeds.empty(), "regret_harness_multi: need at least one seed");
  std::vector<RegretResult> runs(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, seeds.size()));
  auto worker = [&](unsigned w) {
    for (std::size_t i = w; i < seeds.size(); i += threads) {
      StreamSpec s = spec;
      s.seed = seeds[i];
      TrackerConfig c = config;
      c.init_seed = seeds[i];
      runs[i] = regret_harness(s, steps, c);
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  MultiSeedRegret out;
  out.seeds = seeds.size();
  out.step_cap_respected = runs[0].step_cap_respected;
  out.warning = runs[0].warning;
  const auto T = static_cast<std::size_t>(steps);
  out.mean_gap.resize(T);
  out.stderr_gap.resize(T);
  out.mean_cumulative.resize(T);
  std::vector<double> column(seeds.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < runs.size(); ++i) column[i] = runs[i].gaps[t];
    const auto ms = stats::mean_stderr(column);
    out.mean_gap[t] = ms.mean;
    out.stderr_gap[t] = ms.std_error;
    double cum = 0.0;
    for (const auto& r : runs) cum += r.cumulative[t];
    out.mean_cumulative[t] = cum / static_cast<double>(runs.size());
  }
  out.log_fit = fit_log_regret(out.mean_cumulative);
  out.c_hat = fit_inverse_t(out.mean_gap);
  return out;
}

long epsilon_accuracy_time(double c, double eps) {
  detail::require(c > 0.0 && eps > 0.0, "epsilon_accuracy_time: C and eps must be > 0");
  return static_cast<long>(std::ceil(c / eps));
}

}  // namespace zdp
