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
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "zdp/nullspace.hpp"

namespace zdp {

/// Low-rank update Delta W = A B^T with A, B in R^{d x r}.
class LoraFactors {
 public:
  LoraFactors(Eigen::MatrixXd a, Eigen::MatrixXd b);

  [[nodiscard]] const Eigen::MatrixXd& a() const { return a_; }
  [[nodiscard]] const Eigen::MatrixXd& b() const { return b_; }
  [[nodiscard]] Eigen::Index r() const { return a_.cols(); }
  [[nodiscard]] Eigen::Index d() const { return a_.rows(); }
  [[nodiscard]] Eigen::MatrixXd update() const { return a_ * b_.transpose(); }

  Eigen::MatrixXd& mutable_a() { return a_; }
  Eigen::MatrixXd& mutable_b() { return b_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

/// Comparison tolerance, applied after scaling by the largest term.
inline constexpr double kCertificateTolerance = 1e-9;

struct CertificateResult {
  double quantity = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  bool satisfied = true;
  double slack = 0.0;  ///< min distance to a supplied bound (negative = violated)
};

/// satisfied <=> lower - tol <= quantity <= upper + tol,
/// tol = relative_tol * max|term| + absolute_tol.
CertificateResult check_bounds(double quantity, std::optional<double> lower,
                               std::optional<double> upper,
                               double relative_tol = kCertificateTolerance,
                               double absolute_tol = 0.0);

struct VarianceLeakCertificate {
  CertificateResult result;  ///< quantity = NVL, bounds = k lambda_min/max(G)
  double nvl = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Eigen::Index k = 0;
  /// NVL / k. The sandwich gives lambda_min(G) <= NVL/k <= lambda_max(G).
  double nvl_per_direction = 0.0;
};

/// Checks k lambda_min(G) <= ||(H + dH) V0||_F^2 <= k lambda_max(G) with
/// G = dH^T dH. Throws InvalidArgument when V0 is not in ker(H) (relative
/// residual above 1e-8).
VarianceLeakCertificate variance_leak_certificate(const ActivationMatrix& h,
                                                  const Eigen::MatrixXd& dh,
                                                  const NullBasis& v0);

struct RankLeakCertificate {
  CertificateResult result;  ///< quantity = leak, upper = intermediate bound
  double leak = 0.0;                ///< ||(A B^T) V0||_F
  double intermediate_bound = 0.0;  ///< sigma_max(A) ||B^T V0||_F
  double outer_bound = 0.0;         ///< sigma_max(A) sigma_max(B) ||U_B^T V0||_F
  double overlap_sq = 0.0;          ///< ||U_B^T V0||_F^2
  double cos2_sum = 0.0;            ///< sum of cos^2 of principal angles
  double sigma_max_a = 0.0;
  double sigma_max_b = 0.0;
  std::vector<double> angles;
  bool chain_ordered = true;  ///< leak <= intermediate <= outer
  bool degenerate = false;    ///< B == 0, U_B undefined
};

RankLeakCertificate rank_leak_certificate(const LoraFactors& factors, const Eigen::MatrixXd& v0);
RankLeakCertificate rank_leak_certificate(const LoraFactors& factors, const NullBasis& v0);

/// Orthonormal basis of im(B) from a thin SVD (numerical rank).
Eigen::MatrixXd column_space_basis(const Eigen::MatrixXd& b);

/// E ||U^T V||_F^2 = r k / d for independent Haar subspaces.
double expected_overlap(Eigen::Index d, Eigen::Index r, Eigen::Index k);

struct OverlapEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double expected = 0.0;
  long trials = 0;
  [[nodiscard]] bool within(double n_stderr) const;
};

/// Monte Carlo of ||U^T V||_F^2 over Haar pairs; trial i uses
/// RngSpec{seed, 1}.substream(i).
OverlapEstimate mc_overlap(Eigen::Index d, Eigen::Index r, Eigen::Index k, long trials,
                           std::uint64_t seed, unsigned threads = 0);

struct DkResidualCertificate {
  CertificateResult result;  ///< two-sided form; quantity = leak with the estimate
  double leak_estimated = 0.0;  ///< ||H_hat V_est||_F^2
  double leak_true = 0.0;       ///< ||H_hat V0||_F^2
  double gram_norm = 0.0;       ///< ||dH^T dH||_2
  double sin_theta_sq = 0.0;    ///< ||sin Theta(V_est, V0)||_F^2
  double correction = 0.0;      ///< 2 ||G||_2 ||sin Theta||_F^2
  bool one_sided_holds = true;  ///< leak_est <= leak_true + correction
  bool two_sided_holds = true;  ///< |leak_est - leak_true| <= correction
};

DkResidualCertificate dk_residual_certificate(const ActivationMatrix& h_hat,
                                              const NullBasis& v_true, const NullBasis& v_est,
                                              const Eigen::MatrixXd& dh);

struct TraceSandwichCertificate {
  CertificateResult result;  ///< quantity = tr(P Sigma)
  double trace_p_sigma = 0.0;
  double trace_diff_sigma = 0.0;  ///< tr((P - P*) Sigma)
  double projector_distance_sq = 0.0;
  double lower = 0.0;  ///< delta/2 ||P - P*||_F^2
  double upper = 0.0;  ///< L/2 ||P - P*||_F^2
  double identity_residual = 0.0;  ///< |tr(Pi P Pi) - ||P - P*||_F^2 / 2|
};

/// Requires ker(Sigma) = im(P*) (||Sigma P*||_F <= 1e-9 ||Sigma||_F), equal
/// projector ranks, and the spectrum of Sigma on im(I - P*) inside
/// [delta, L]. Violations throw InvalidArgument.
TraceSandwichCertificate projector_trace_sandwich(const Projector& p, const Projector& pstar,
                                                  const Eigen::MatrixXd& sigma, double delta,
                                                  double lipschitz);

/// Heuristic (not a bound with guarantees): expected SNL increase
/// sigma_max(A)^2 sigma_max(B)^2 (r k / d) / ||H_hat||_F^2.
double heuristic_snl_increase(const LoraFactors& factors, Eigen::Index d, Eigen::Index k,
                              double frob_hhat_sq);

}  // namespace zdp
