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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace zdp {

/// Token activations of one layer: rows are tokens, columns hidden units.
///
/// When `centered` is set, null-space extraction and the domain covariance
/// operate on the column-centred matrix; probes always see the raw data.
class ActivationMatrix {
 public:
  explicit ActivationMatrix(Eigen::MatrixXd data, std::string layer_id = {},
                            bool centered = false);

  [[nodiscard]] const Eigen::MatrixXd& data() const { return data_; }
  [[nodiscard]] Eigen::Index n_tokens() const { return data_.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return data_.cols(); }
  [[nodiscard]] const std::string& layer_id() const { return layer_id_; }
  [[nodiscard]] bool centered() const { return centered_; }

  /// The matrix null-space analysis works on (centred copy if flagged).
  [[nodiscard]] Eigen::MatrixXd analysis_matrix() const;

 private:
  Eigen::MatrixXd data_;
  std::string layer_id_;
  bool centered_;
};

enum class Side { right, left };

const char* to_string(Side side);

/// Orthonormal basis of a right null space (ker H) or left null space
/// (ker H^T), together with the singular-value cutoff that produced it.
class NullBasis {
 public:
  /// Validates orthonormality (1e-10 elementwise). Throws InvalidArgument.
  NullBasis(Eigen::MatrixXd basis, double cutoff, Side side,
            std::string warning = {});

  [[nodiscard]] const Eigen::MatrixXd& basis() const { return basis_; }
  [[nodiscard]] Eigen::Index k() const { return basis_.cols(); }
  [[nodiscard]] Eigen::Index ambient_dim() const { return basis_.rows(); }
  [[nodiscard]] double cutoff() const { return cutoff_; }
  [[nodiscard]] Side side() const { return side_; }
  /// Non-empty when the extraction was legal but suspicious (rank 0).
  [[nodiscard]] const std::string& warning() const { return warning_; }

 private:
  Eigen::MatrixXd basis_;
  double cutoff_;
  Side side_;
  std::string warning_;
};

/// Symmetric idempotent matrix; P^T = P holds bitwise.
class Projector {
 public:
  Projector(Eigen::MatrixXd matrix, Eigen::Index rank);

  static Projector zero(Eigen::Index dim);
  static Projector identity(Eigen::Index dim);

  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
  [[nodiscard]] Eigen::Index rank() const { return rank_; }
  [[nodiscard]] Eigen::Index dim() const { return matrix_.rows(); }
  [[nodiscard]] Projector complement() const;

 private:
  Eigen::MatrixXd matrix_;
  Eigen::Index rank_;
};

/// How the singular-value truncation threshold is chosen.
struct CutoffPolicy {
  enum class Kind { default_relative, relative, absolute };
  Kind kind = Kind::default_relative;
  double value = 0.0;

  /// max(n, d) * machine epsilon * sigma_max.
  static CutoffPolicy standard() { return {}; }
  static CutoffPolicy relative(double factor) { return {Kind::relative, factor}; }
  static CutoffPolicy absolute(double cutoff) { return {Kind::absolute, cutoff}; }

  [[nodiscard]] double resolve(Eigen::Index rows, Eigen::Index cols,
                               double sigma_max) const;
};

/// Singular values within this fraction of sigma_max above the cutoff count
/// as null (ties resolve toward the larger null space).
inline constexpr double kCutoffTieBand = 1e-12;

NullBasis null_basis(const ActivationMatrix& h,
                     CutoffPolicy policy = CutoffPolicy::standard(),
                     Side side = Side::right);
NullBasis null_basis(const Eigen::MatrixXd& h,
                     CutoffPolicy policy = CutoffPolicy::standard(),
                     Side side = Side::right);

/// Kernel of M via the eigendecomposition of the Gram matrix M^T M.
/// Eigenvalues at or below `relative_tol * lambda_max` count as zero.
/// Independent route used to check ker(M) = ker(M^T M).
NullBasis null_basis_from_gram(const Eigen::MatrixXd& m, double relative_tol = 1e-10);

/// (1/n) H^T H, symmetrised.
Eigen::MatrixXd domain_covariance(const ActivationMatrix& h);

/// Principal angles between span(u) and span(v), ascending (cosines
/// descending), min(r, k) entries in [0, pi/2]. Small angles come from the
/// sines so they stay accurate below 1e-8.
std::vector<double> principal_angles(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

/// ||sin Theta(V1, V2)||_F = sqrt(k - ||V1^T V2||_F^2), evaluated as
/// ||(I - V1 V1^T) V2||_F for accuracy.
double sin_theta_distance(const NullBasis& v1, const NullBasis& v2);
double sin_theta_distance(const Eigen::MatrixXd& v1, const Eigen::MatrixXd& v2);

Projector projector_from_basis(const NullBasis& v);
Projector projector_from_basis(const Eigen::MatrixXd& orthonormal_columns);

// Small shared helpers.

/// max_ij |(V^T V - I)_ij|.
double orthonormality_error(const Eigen::MatrixXd& v);
double spectral_norm(const Eigen::MatrixXd& m);
/// Thin QR with the sign of diag(R) fixed non-negative; returns Q (rows x cols).
/// Throws NumericalError when a column collapses (|R_ii| <= tol * max|R_jj|).
Eigen::MatrixXd thin_q(const Eigen::MatrixXd& m, double collapse_tol = 1e-12);
/// Orthonormal basis of the orthogonal complement of span(v) in R^d.
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& v);
/// Copy the upper triangle onto the lower one so the result is bitwise symmetric.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m);
bool all_finite(const Eigen::MatrixXd& m);

}  // namespace zdp
