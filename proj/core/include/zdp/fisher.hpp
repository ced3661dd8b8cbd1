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

#include <vector>

#include <Eigen/Dense>

#include "zdp/nullspace.hpp"
#include "zdp/random.hpp"

namespace zdp {

/// Categorical model p(y | h) = softmax(W h) over c >= 2 classes.
class SoftmaxModel {
 public:
  explicit SoftmaxModel(Eigen::MatrixXd w);

  [[nodiscard]] const Eigen::MatrixXd& w() const { return w_; }
  [[nodiscard]] Eigen::Index classes() const { return w_.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return w_.cols(); }

  [[nodiscard]] Eigen::VectorXd logits(const Eigen::VectorXd& h) const;
  [[nodiscard]] Eigen::VectorXd probabilities(const Eigen::VectorXd& h) const;

 private:
  Eigen::MatrixXd w_;
};

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

/// W^T (diag(p) - p p^T) W with p = softmax(W h).
Eigen::MatrixXd softmax_fim(const SoftmaxModel& model, const Eigen::VectorXd& h);

/// P F P with P the d-space projector onto the row space of H, i.e.
/// I - V0 V0^T.
Eigen::MatrixXd restricted_fisher(const Eigen::MatrixXd& fim, const ActivationMatrix& h,
                                  CutoffPolicy policy = CutoffPolicy::standard());
Eigen::MatrixXd restricted_fisher(const Eigen::MatrixXd& fim, const NullBasis& v0);

/// KL(softmax(p_logits) || softmax(q_logits)), log-sum-exp stabilised.
double categorical_kl(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits);

struct KlCheckResult {
  double scale = 0.0;
  double kl_exact = 0.0;
  double kl_quadratic = 0.0;  ///< 1/2 s^2 dtheta^T F_par dtheta
  double residual = 0.0;      ///< kl_exact - kl_quadratic
};

/// Exact KL between p(. | h) and p(. | h + s dtheta) against the restricted
/// quadratic form, for each scale s. The base activations define F_par.
std::vector<KlCheckResult> kl_second_order_check(const SoftmaxModel& model,
                                                 const Eigen::VectorXd& h,
                                                 const Eigen::VectorXd& dtheta,
                                                 const std::vector<double>& scales,
                                                 const ActivationMatrix& base);

/// Log-log slope of |residual| against s.
double residual_exponent(const std::vector<KlCheckResult>& rows);

struct SilenceCheck {
  bool silent = false;
  double residual = 0.0;  ///< ||F V0||_F
};

/// silent iff ||F V0||_F <= tol * ||F||_F.
SilenceCheck fisher_silence_check(const Eigen::MatrixXd& fim, const NullBasis& v0, double tol);

/// Desk-scale fixture: rank-deficient base activations, a softmax head whose
/// rows lie in im(H^T) (Fisher-silent), and a hidden state h in the row space.
/// With `silent = false` the first row of W gains a component along the
/// first null direction.
struct SilentFixture {
  SoftmaxModel model;
  ActivationMatrix base;
  NullBasis null;
  Eigen::VectorXd h;
};

SilentFixture make_silent_fixture(Eigen::Index classes, Eigen::Index d, Eigen::Index rank,
                                  RngSpec rng, bool silent = true);

}  // namespace zdp
