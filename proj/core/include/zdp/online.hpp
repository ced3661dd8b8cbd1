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
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zdp/certificates.hpp"
#include "zdp/nullspace.hpp"
#include "zdp/random.hpp"
#include "zdp/stats.hpp"

namespace zdp {

/// Synthetic stream with population Gram Sigma = E[H_t^T H_t]. Sigma has
/// exactly k zero eigenvalues; `spectrum` lists the d - k nonzero ones,
/// all >= eigengap > 0. Rows of each batch are N(0, Sigma / m) drawn inside
/// im(Sigma).
struct StreamSpec {
  Eigen::Index d = 0;
  Eigen::Index k = 0;
  std::vector<double> spectrum;
  double eigengap = 0.0;
  Eigen::Index batch_rows = 1;
  /// Declared noise scale; 0 = unspecified (the harness estimates it).
  double tau2 = 0.0;
  std::uint64_t seed = 0;

  /// All nonzero eigenvalues equal to `delta`.
  static StreamSpec flat(Eigen::Index d, Eigen::Index k, Eigen::Index m, double delta,
                         std::uint64_t seed);
  void validate() const;
  [[nodiscard]] double sigma_norm() const;
};

/// Largest step constant allowed by the c <= 1 / (4 ||Sigma||_2) schedule cap.
double max_step_constant(double sigma_norm);
bool step_constant_respects_cap(double c, double sigma_norm);

// --- Online null-space tracker ---------------------------------------------

struct TrackerState {
  Eigen::MatrixXd basis;  ///< d x k, orthonormal
  std::uint64_t t = 0;
  double c = 0.0;  ///< eta_t = c / t
  Eigen::Index k = 0;
  std::vector<double> score_history;
};

/// How line 6 of the tracker update removes the current span.
enum class Deflation {
  /// v <- v - eta (I - P) G v: only the update is deflated (Oja tangent step).
  update,
  /// v <- v - eta G v, then v <- v - P v, exactly as the listing reads. This
  /// annihilates the basis itself and collapses at any fixed point; kept for
  /// ablation only.
  literal,
};

TrackerState ont_init_random(Eigen::Index d, Eigen::Index k, double c, RngSpec rng);
TrackerState ont_init_warm(const Eigen::MatrixXd& basis, double c);

/// One tracker step on batch H_t (m x d). Returns D_t = ||H_t V_t||_F^2/(m k)
/// evaluated with the updated basis. Throws NumericalError on QR collapse.
double ont_step(TrackerState& state, const Eigen::MatrixXd& batch,
                Deflation deflation = Deflation::update);

// --- Null-aligned low-rank optimizer ---------------------------------------

struct OnalConfig {
  double c = 0.1;            ///< eta_t = c / t
  double clip = 0.0;         ///< lambda; 0 disables clipping
  Eigen::Index reorth_period = 0;  ///< S; 0 disables the periodic QR pass

  void validate() const;
};

struct OnalLayer {
  LoraFactors factors;
  Projector projector;
};

struct OnalState {
  std::vector<OnalLayer> layers;
  std::uint64_t t = 0;
  OnalConfig config;
};

struct LayerGradients {
  Eigen::MatrixXd grad_a;
  Eigen::MatrixXd grad_b;
};

/// Factors start as Gaussian draws (scale `init_scale`) projected into
/// im(P) for each layer.
OnalState onal_init(std::vector<Projector> projectors, Eigen::Index r, double init_scale,
                    const OnalConfig& config, RngSpec rng);

void onal_step(OnalState& state, std::span<const LayerGradients> grads);

/// max of ||(I - P) A||_F / ||A||_F and the same for B (0 for zero factors).
double containment_error(const OnalLayer& layer);

/// Quadratic surrogate 1/2 ||A B^T - target||_F^2 and its factor gradients.
double surrogate_loss(const LoraFactors& f, const Eigen::MatrixXd& target);
LayerGradients surrogate_gradients(const LoraFactors& f, const Eigen::MatrixXd& target);

struct OnalRunResult {
  LoraFactors factors;
  Eigen::MatrixXd h_hat;   ///< H + H A B^T
  Eigen::MatrixXd delta_h;  ///< H A B^T
  double snl = 0.0;         ///< SNL of h_hat against the true base null basis
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double max_containment_error = 0.0;
};

/// Runs ONAL on one layer with base activations `base` and projector
/// `projector` (exact or estimated) against the quadratic surrogate. SNL is
/// measured with `true_null`.
OnalRunResult run_onal_surrogate(const Eigen::MatrixXd& base, const NullBasis& true_null,
                                 const Projector& projector, const Eigen::MatrixXd& target,
                                 Eigen::Index r, Eigen::Index steps, const OnalConfig& config,
                                 RngSpec rng);

// --- Regret harness --------------------------------------------------------

enum class TrackerInit { random, warm };

struct TrackerConfig {
  double c = 0.0;
  TrackerInit init = TrackerInit::random;
  std::uint64_t init_seed = 0;
  Deflation deflation = Deflation::update;
};

struct RegretResult {
  std::vector<double> scores;         ///< D_t
  std::vector<double> oracle_scores;  ///< D_t* with the population null basis
  std::vector<double> gaps;           ///< D_t - D_t*
  std::vector<double> cumulative;     ///< R_t
  stats::LineFit log_fit;             ///< R_t ~ a ln t + b over [T/10, T]
  double c_hat = 0.0;                 ///< gap_t ~ C / t over [T/10, T]
  double tau2_hat = 0.0;              ///< sub-exponential envelope fit
  double final_sin_theta = 0.0;
  bool step_cap_respected = true;
  std::string warning;
};

RegretResult regret_harness(const StreamSpec& spec, Eigen::Index steps,
                            const TrackerConfig& config);

struct MultiSeedRegret {
  std::vector<double> mean_gap;
  std::vector<double> stderr_gap;
  std::vector<double> mean_cumulative;
  stats::LineFit log_fit;
  double c_hat = 0.0;
  bool step_cap_respected = true;
  std::string warning;
  std::size_t seeds = 0;
};

/// Seed s runs the stream with spec.seed = s and init_seed = s.
MultiSeedRegret regret_harness_multi(const StreamSpec& spec, Eigen::Index steps,
                                     const TrackerConfig& config,
                                     std::span<const std::uint64_t> seeds,
                                     unsigned threads = 0);

/// Fit helpers shared by the harnesses (window [T/10, T], 1-based t).
stats::LineFit fit_log_regret(std::span<const double> cumulative);
double fit_inverse_t(std::span<const double> gaps);

/// ceil(C / eps).
long epsilon_accuracy_time(double c, double eps);

}  // namespace zdp
