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
#include "zdp/fisher.hpp"

#include <algorithm>
#include <cmath>

#include "zdp/error.hpp"
#include "zdp/stats.hpp"
#include "zdp/synth.hpp"

namespace zdp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

SoftmaxModel::SoftmaxModel(MatrixXd w) : w_(std::move(w)) {
  detail::require(w_.rows() >= 2, "softmax model needs at least two classes");
  detail::require(w_.cols() >= 1, "softmax model needs a positive hidden width");
  detail::require(w_.allFinite(), "softmax weights contain NaN or Inf");
}

VectorXd SoftmaxModel::logits(const VectorXd& h) const {
  detail::require(h.size() == w_.cols(), "hidden state width does not match W");
  return w_ * h;
}

VectorXd log_softmax(const VectorXd& logits) {
  detail::require(logits.size() >= 1, "log_softmax: empty input");
  const double top = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - top;
  return shifted - std::log(shifted.exp().sum());
}

VectorXd SoftmaxModel::probabilities(const VectorXd& h) const {
  return log_softmax(logits(h)).array().exp();
}

MatrixXd softmax_fim(const SoftmaxModel& model, const VectorXd& h) {
  const VectorXd p = model.probabilities(h);
  const MatrixXd m = MatrixXd(p.asDiagonal()) - p * p.transpose();
  MatrixXd f = symmetrized(model.w().transpose() * m * model.w());
  if (!f.allFinite()) throw NumericalError("softmax_fim: non-finite Fisher matrix");
  return f;
}

MatrixXd restricted_fisher(const MatrixXd& fim, const NullBasis& v0) {
  detail::require(fim.rows() == fim.cols() && fim.rows() == v0.ambient_dim(),
                  "restricted_fisher: dimension mismatch");
  const Index d = fim.rows();
  const MatrixXd p = MatrixXd::Identity(d, d) - v0.basis() * v0.basis().transpose();
  return symmetrized(p * fim * p);
}

MatrixXd restricted_fisher(const MatrixXd& fim, const ActivationMatrix& h, CutoffPolicy policy) {
  return restricted_fisher(fim, null_basis(h, policy));
}

double categorical_kl(const VectorXd& p_logits, const VectorXd& q_logits) {
  detail::require(p_logits.size() == q_logits.size(), "categorical_kl: class counts differ");
  const VectorXd lp = log_softmax(p_logits);
  const VectorXd lq = log_softmax(q_logits);
  const double kl = (lp.array().exp() * (lp - lq).array()).sum();
  if (!std::isfinite(kl)) throw NumericalError("categorical_kl: non-finite divergence");
  return std::max(kl, 0.0);
}

std::vector<KlCheckResult> kl_second_order_check(const SoftmaxModel& model, const VectorXd& h,
                                                 const VectorXd& dtheta,
                                                 const std::vector<double>& scales,
                                                 const ActivationMatrix& base) {
  detail::require(dtheta.size() == model.dim() && base.dim() == model.dim(),
                  "kl_second_order_check: dimension mismatch");
  const MatrixXd f_par = restricted_fisher(softmax_fim(model, h), base);
  const double curvature = std::max(dtheta.dot(f_par * dtheta), 0.0);
  const VectorXd base_logits = model.logits(h);
  std::vector<KlCheckResult> rows;
  rows.reserve(scales.size());
  for (double s : scales) {
    KlCheckResult r;
    r.scale = s;
    r.kl_exact = categorical_kl(base_logits, model.logits(h + s * dtheta));
    r.kl_quadratic = 0.5 * s * s * curvature;
    r.residual = r.kl_exact - r.kl_quadratic;
    rows.push_back(r);
  }
  return rows;
}

double residual_exponent(const std::vector<KlCheckResult>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.scale);
    y.push_back(std::abs(r.residual));
  }
  return stats::loglog_slope(x, y);
}

SilenceCheck fisher_silence_check(const MatrixXd& fim, const NullBasis& v0, double tol) {
  detail::require(fim.rows() == fim.cols() && fim.rows() == v0.ambient_dim(),
                  "fisher_silence_check: dimension mismatch");
  detail::require(tol >= 0.0, "fisher_silence_check: tolerance must be >= 0");
  SilenceCheck out;
  out.residual = (fim * v0.basis()).norm();
  out.silent = out.residual <= tol * fim.norm();
  return out;
}

SilentFixture make_silent_fixture(Index classes, Index d, Index rank, RngSpec rng, bool silent) {
  detail::require(classes >= 2, "silent fixture: need at least two classes");
  detail::require(rank >= 1 && rank < d, "silent fixture: need 1 <= rank < d");
  RankDeficientBase base = rank_deficient_base(std::max<Index>(2 * d, 32), d, rank, rng.substream(0));
  Philox gen(rng.substream(1));
  const MatrixXd& v0 = base.null.basis();
  const MatrixXd p_row = MatrixXd::Identity(d, d) - v0 * v0.transpose();
  MatrixXd w = gen.normal_matrix(classes, d) * p_row;
  if (!silent) w.row(0) += v0.col(0).transpose() * w.row(0).norm();
  VectorXd h = p_row * gen.normal_vector(d);
  return SilentFixture{SoftmaxModel(std::move(w)), std::move(base.h), std::move(base.null),
                       std::move(h)};
}

}  // namespace zdp
