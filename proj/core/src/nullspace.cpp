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
#include "zdp/nullspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zdp/error.hpp"

namespace zdp {

using Eigen::Index;
using Eigen::MatrixXd;

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

ActivationMatrix::ActivationMatrix(MatrixXd data, std::string layer_id, bool centered)
    : data_(std::move(data)), layer_id_(std::move(layer_id)), centered_(centered) {
  detail::require(data_.rows() >= 1 && data_.cols() >= 1,
                  "activation matrix needs at least one row and one column");
  detail::require(data_.allFinite(), "activation matrix contains NaN or Inf");
}

MatrixXd ActivationMatrix::analysis_matrix() const {
  if (!centered_) return data_;
  return data_.rowwise() - data_.colwise().mean();
}

const char* to_string(Side side) { return side == Side::right ? "right" : "left"; }

double orthonormality_error(const MatrixXd& v) {
  if (v.cols() == 0) return 0.0;
  const MatrixXd gram = v.transpose() * v;
  return (gram - MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

NullBasis::NullBasis(MatrixXd basis, double cutoff, Side side, std::string warning)
    : basis_(std::move(basis)), cutoff_(cutoff), side_(side), warning_(std::move(warning)) {
  detail::require(basis_.rows() >= 1, "null basis needs a positive ambient dimension");
  detail::require(basis_.cols() <= basis_.rows(), "null basis has more columns than rows");
  detail::require(basis_.allFinite(), "null basis contains NaN or Inf");
  detail::require(cutoff_ >= 0.0, "null basis cutoff must be non-negative");
  detail::require(orthonormality_error(basis_) <= 1e-10,
                  "null basis columns are not orthonormal (1e-10)");
}

MatrixXd symmetrized(const MatrixXd& m) {
  detail::require(m.rows() == m.cols(), "symmetrized: matrix must be square");
  MatrixXd out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    out(j, j) = m(j, j);
    for (Index i = 0; i < j; ++i) {
      const double avg = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = avg;
      out(j, i) = avg;
    }
  }
  return out;
}

Projector::Projector(MatrixXd matrix, Index rank) : matrix_(symmetrized(matrix)), rank_(rank) {
  detail::require(matrix_.allFinite(), "projector contains NaN or Inf");
  detail::require(rank_ >= 0 && rank_ <= matrix_.rows(), "projector rank out of range");
  detail::require((matrix_ * matrix_ - matrix_).norm() <= 1e-9,
                  "projector is not idempotent (1e-9 Frobenius)");
  detail::require(std::abs(matrix_.trace() - static_cast<double>(rank_)) <= 1e-8,
                  "projector trace does not match its rank (1e-8)");
}

Projector Projector::zero(Index dim) { return Projector(MatrixXd::Zero(dim, dim), 0); }

Projector Projector::identity(Index dim) {
  return Projector(MatrixXd::Identity(dim, dim), dim);
}

Projector Projector::complement() const {
  return Projector(MatrixXd::Identity(dim(), dim()) - matrix_, dim() - rank_);
}

double CutoffPolicy::resolve(Index rows, Index cols, double sigma_max) const {
  switch (kind) {
    case Kind::default_relative:
      return static_cast<double>(std::max(rows, cols)) *
             std::numeric_limits<double>::epsilon() * sigma_max;
    case Kind::relative:
      detail::require(value >= 0.0, "relative cutoff factor must be non-negative");
      return value * sigma_max;
    case Kind::absolute:
      detail::require(value >= 0.0, "absolute cutoff must be non-negative");
      return value;
  }
  return 0.0;
}

NullBasis null_basis(const MatrixXd& h, CutoffPolicy policy, Side side) {
  detail::require(h.rows() >= 1 && h.cols() >= 1, "null_basis: empty matrix");
  detail::require(h.allFinite(), "null_basis: input contains NaN or Inf");
  const MatrixXd a = side == Side::right ? h : MatrixXd(h.transpose());

  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double cutoff = policy.resolve(a.rows(), a.cols(), sigma_max);
  const double threshold = cutoff + kCutoffTieBand * sigma_max;

  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > threshold) ++rank;

  const Index d = a.cols();
  MatrixXd basis = svd.matrixV().rightCols(d - rank);
  std::string warning;
  if (rank == 0) warning = "rank 0: every direction is treated as null";
  return NullBasis(std::move(basis), cutoff, side, std::move(warning));
}

NullBasis null_basis(const ActivationMatrix& h, CutoffPolicy policy, Side side) {
  return null_basis(h.analysis_matrix(), policy, side);
}

NullBasis null_basis_from_gram(const MatrixXd& m, double relative_tol) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "null_basis_from_gram: empty matrix");
  detail::require(m.allFinite(), "null_basis_from_gram: input contains NaN or Inf");
  detail::require(relative_tol >= 0.0, "null_basis_from_gram: tolerance must be >= 0");
  const MatrixXd gram = symmetrized(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lambda_max = lambda.cwiseAbs().maxCoeff();
  const double threshold = relative_tol * lambda_max;
  Index k = 0;
  while (k < lambda.size() && lambda(k) <= threshold) ++k;
  std::string warning;
  if (k == m.cols()) warning = "rank 0: every direction is treated as null";
  return NullBasis(eig.eigenvectors().leftCols(k), std::sqrt(threshold), Side::right,
                   std::move(warning));
}

MatrixXd domain_covariance(const ActivationMatrix& h) {
  const MatrixXd x = h.analysis_matrix();
  return symmetrized(x.transpose() * x / static_cast<double>(x.rows()));
}

std::vector<double> principal_angles(const MatrixXd& u, const MatrixXd& v) {
  detail::require(u.rows() == v.rows(), "principal_angles: ambient dimensions differ");
  detail::require(orthonormality_error(u) <= 1e-8, "principal_angles: U is not orthonormal");
  detail::require(orthonormality_error(v) <= 1e-8, "principal_angles: V is not orthonormal");
  const Index q = std::min(u.cols(), v.cols());
  std::vector<double> angles;
  if (q == 0) return angles;

  const MatrixXd overlap = u.transpose() * v;
  const Eigen::VectorXd cosines = Eigen::JacobiSVD<MatrixXd>(overlap).singularValues();
  Eigen::VectorXd sines =
      Eigen::JacobiSVD<MatrixXd>(MatrixXd(v - u * overlap)).singularValues();
  std::sort(sines.data(), sines.data() + sines.size());

  angles.reserve(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(i), 0.0, 1.0);
    angles.push_back(c * c >= 0.5 ? std::asin(s) : std::acos(c));
  }
  // Both branches are monotone in their argument; enforce ordering against
  // rounding at the crossover.
  std::sort(angles.begin(), angles.end());
  return angles;
}

double sin_theta_distance(const MatrixXd& v1, const MatrixXd& v2) {
  detail::require(v1.rows() == v2.rows(), "sin_theta_distance: ambient dimensions differ");
  detail::require(v1.cols() == v2.cols(), "sin_theta_distance: subspace dimensions differ");
  return (v2 - v1 * (v1.transpose() * v2)).norm();
}

double sin_theta_distance(const NullBasis& v1, const NullBasis& v2) {
  detail::require(v1.side() == v2.side(), "sin_theta_distance: bases come from different sides");
  return sin_theta_distance(v1.basis(), v2.basis());
}

Projector projector_from_basis(const MatrixXd& v) {
  detail::require(orthonormality_error(v) <= 1e-8,
                  "projector_from_basis: columns are not orthonormal");
  return Projector(v * v.transpose(), v.cols());
}

Projector projector_from_basis(const NullBasis& v) { return projector_from_basis(v.basis()); }

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

MatrixXd thin_q(const MatrixXd& m, double collapse_tol) {
  detail::require(m.cols() <= m.rows(), "thin_q: more columns than rows");
  if (m.cols() == 0) return MatrixXd(m.rows(), 0);
  Eigen::HouseholderQR<MatrixXd> qr(m);
  const MatrixXd& packed = qr.matrixQR();
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(m.rows(), m.cols());
  const double largest = packed.diagonal().cwiseAbs().maxCoeff();
  for (Index j = 0; j < m.cols(); ++j) {
    const double r = packed(j, j);
    if (!(std::abs(r) > collapse_tol * largest)) {
      throw NumericalError("thin QR: column " + std::to_string(j) +
                           " collapsed (|R_jj| = " + std::to_string(std::abs(r)) +
                           ", max |R_ii| = " + std::to_string(largest) + ")");
    }
    if (r < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

MatrixXd orthogonal_complement(const MatrixXd& v) {
  const Index d = v.rows();
  if (v.cols() == 0) return MatrixXd::Identity(d, d);
  Eigen::HouseholderQR<MatrixXd> qr(v);
  const MatrixXd full = qr.householderQ();
  return full.rightCols(d - v.cols());
}

}  // namespace zdp
