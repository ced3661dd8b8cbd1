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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zdp/nullspace.hpp"

namespace zdp {

/// Per-layer probe values. nvl == d_score * n * k.
struct ProbeReport {
  std::string layer_id;
  double nvl = 0.0;
  double d_score = 0.0;
  double snl = 0.0;
  std::optional<double> fnc;
  std::optional<double> bina_score;
  Eigen::Index k = 0;
  Eigen::Index n = 0;
};

struct NvlResult {
  double nvl = 0.0;      ///< ||H_hat V0||_F^2
  double d_score = 0.0;  ///< nvl / (n k)
};

/// Null-variance leak of perturbed activations against a base right-null
/// basis. Throws InvalidArgument when k == 0 ("no null directions to probe").
NvlResult nvl(const ActivationMatrix& h_hat, const NullBasis& v0);

/// Spectral null leakage ||H_hat V0||_F^2 / ||H_hat||_F^2, in [0, 1].
double snl(const ActivationMatrix& h_hat, const NullBasis& v0);

/// Fisher null conservation ||F V0||_F^2. F must be symmetric PSD to 1e-8
/// (relative to ||F||_F).
double fnc(const Eigen::MatrixXd& fisher, const NullBasis& v0);

ProbeReport probe_report(const ActivationMatrix& h_hat, const NullBasis& v0,
                         const std::optional<Eigen::MatrixXd>& fisher = std::nullopt);

// --- Bidirectional null adversary -----------------------------------------

enum class BinaObjective { score_functional, logit_difference };

struct BinaConfig {
  double step_size = 0.1;  ///< eta > 0
  double budget = 1.0;     ///< epsilon > 0, radius of the L2 ball
  int iterations = 50;     ///< T >= 1
  BinaObjective objective = BinaObjective::logit_difference;
  bool record_trajectory = false;

  void validate() const;
};

/// Map h -> outputs in R^d. The Jacobian is optional; when absent BINA uses
/// central differences with step 1e-5 * (1 + ||h||_inf).
struct DifferentiableMap {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// User score functional L(h) for BinaObjective::score_functional.
struct ScalarFunctional {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct BinaStep {
  int iteration = 0;
  double score = 0.0;
  double delta_norm = 0.0;
  double off_null_norm = 0.0;  ///< ||(I - P) delta||_2 after the step
};

struct BinaResult {
  Eigen::VectorXd delta;
  double score = 0.0;
  int iterations_run = 0;
  /// Set when the projected ascent direction fell below 1e-12 and the
  /// search stopped early.
  bool dead_gradient = false;
  std::vector<BinaStep> trajectory;
};

/// Projected ascent that searches the right-null ball for the perturbation
/// that moves the left-null part of the output most. P acts on inputs, Q on
/// gradients and outputs, so `map` must return d-dimensional vectors.
BinaResult bina(const Eigen::VectorXd& h, const Projector& p, const Projector& q,
                const DifferentiableMap& map, const BinaConfig& cfg,
                const ScalarFunctional* functional = nullptr);

/// Central-difference gradient, step 1e-5 * (1 + ||x||_inf).
Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x);
Eigen::MatrixXd numerical_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x);

}  // namespace zdp
