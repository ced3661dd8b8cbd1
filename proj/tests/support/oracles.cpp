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
#include "oracles.hpp"

#include <cmath>

namespace zdp::oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index rank_above(const MatrixXd& m, double cutoff) {
  const VectorXd s = Eigen::JacobiSVD<MatrixXd>(m).singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) r += s(i) > cutoff ? 1 : 0;
  return r;
}

MatrixXd plane_rotation(Index d, double theta) {
  MatrixXd v = MatrixXd::Zero(d, 1);
  v(0, 0) = std::cos(theta);
  v(1, 0) = std::sin(theta);
  return v;
}

MatrixXd gram_schmidt(const MatrixXd& m) {
  MatrixXd q = m;
  for (Index j = 0; j < q.cols(); ++j) {
    for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j).normalize();
  }
  return q;
}

MatrixXd isotropic_perturbation(Index n, Index d, double sigma, Philox& gen) {
  return sigma * gram_schmidt(gen.normal_matrix(n, d));
}

MatrixXd with_spectrum(const MatrixXd& basis, const VectorXd& eigenvalues) {
  MatrixXd m = basis * eigenvalues.asDiagonal() * basis.transpose();
  return 0.5 * (m + m.transpose());
}

ScoreMoments score_moments(const SoftmaxModel& model, const VectorXd& h,
                           const std::vector<VectorXd>& directions, long samples, Philox& gen) {
  const VectorXd logits = model.logits(h);
  VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  const Index c = p.size();
  const std::size_t nd = directions.size();
  double tsum = 0.0, tsq = 0.0;
  std::vector<double> qsum(nd, 0.0), qsq(nd, 0.0);
  for (long s = 0; s < samples; ++s) {
    const double u = gen.uniform();
    Index y = 0;
    double acc = p(0);
    while (u > acc && y + 1 < c) acc += p(++y);
    VectorXd e = -p;
    e(y) += 1.0;
    const VectorXd score = model.w().transpose() * e;
    const double t = score.squaredNorm();
    tsum += t;
    tsq += t * t;
    for (std::size_t k = 0; k < nd; ++k) {
      const double q = std::pow(directions[k].dot(score), 2);
      qsum[k] += q;
      qsq[k] += q * q;
    }
  }
  const double n = static_cast<double>(samples);
  auto se = [n](double sum, double sq) {
    const double mean = sum / n;
    return std::sqrt(std::max(sq / n - mean * mean, 0.0) * n / (n - 1.0) / n);
  };
  ScoreMoments out;
  out.trace_mean = tsum / n;
  out.trace_stderr = se(tsum, tsq);
  for (std::size_t k = 0; k < nd; ++k) {
    out.quad_mean.push_back(qsum[k] / n);
    out.quad_stderr.push_back(se(qsum[k], qsq[k]));
  }
  return out;
}

double naive_kl(const VectorXd& p_logits, const VectorXd& q_logits) {
  const double zp = p_logits.array().exp().sum();
  const double zq = q_logits.array().exp().sum();
  double kl = 0.0;
  for (Index i = 0; i < p_logits.size(); ++i) {
    const double p = std::exp(p_logits(i)) / zp;
    kl += p * (std::log(p) - (q_logits(i) - std::log(zq)));
  }
  return kl;
}

}  // namespace zdp::oracle
