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
#include <vector>

#include <Eigen/Dense>

#include "zdp/certificates.hpp"
#include "zdp/nullspace.hpp"
#include "zdp/online.hpp"
#include "zdp/random.hpp"

namespace zdp {

/// n x d matrix with i.i.d. N(0, sigma2 / n) entries.
ActivationMatrix gaussian_activations(Eigen::Index n, Eigen::Index d, double sigma2,
                                      RngSpec rng);

/// d x r orthonormal matrix, Haar distributed: Q factor of a Gaussian
/// matrix with diag(R) made positive.
Eigen::MatrixXd haar_orthonormal(Eigen::Index d, Eigen::Index r, Philox& gen);

struct RankDeficientBase {
  ActivationMatrix h;
  NullBasis null;  ///< exact orthonormal complement of im(R)
};

/// H = L R^T with Gaussian L (n x rank) and R (d x rank). Resamples when a
/// factor comes out numerically rank deficient (at most 16 attempts).
RankDeficientBase rank_deficient_base(Eigen::Index n, Eigen::Index d, Eigen::Index rank,
                                      RngSpec rng);

enum class FactorSpectrum {
  /// Singular values drawn below the maximum, independent right rotations.
  generic,
  /// Joint alignment: the directions of B that overlap ker(H) carry
  /// sigma_max(B) and are mapped by A along sigma_max(A). Every link of the
  /// rank-leak chain holds with equality.
  aligned,
};

/// LoRA factors whose column space im(B) meets span(v0) at the given
/// principal angles (ascending or not; min(r, k) entries in [0, pi/2]), with
/// sigma_max(A) = scale_a and sigma_max(B) = scale_b.
LoraFactors aligned_lowrank_factors(const Eigen::MatrixXd& v0, Eigen::Index r,
                                    std::span<const double> target_angles, double scale_a,
                                    double scale_b, RngSpec rng,
                                    FactorSpectrum spectrum = FactorSpectrum::generic);

/// Random-access view of the stream described by a StreamSpec.
class GramStream {
 public:
  explicit GramStream(StreamSpec spec);

  /// Batch H_t (m x d) for t >= 1; depends only on (spec.seed, t).
  [[nodiscard]] Eigen::MatrixXd batch(std::uint64_t t) const;

  [[nodiscard]] const StreamSpec& spec() const { return spec_; }
  [[nodiscard]] const Eigen::MatrixXd& sigma() const { return sigma_; }
  /// Orthonormal basis of ker(Sigma), d x k.
  [[nodiscard]] const Eigen::MatrixXd& null_basis() const { return null_; }
  [[nodiscard]] double sigma_norm() const { return spec_.sigma_norm(); }

 private:
  StreamSpec spec_;
  Eigen::MatrixXd null_;
  Eigen::MatrixXd root_;  ///< d x (d - k), Sigma = root root^T
  Eigen::MatrixXd sigma_;
};

struct BudgetCheck {
  bool within = false;
  double ratio = 0.0;  ///< ||dH||_2 / ||H||_2
};

/// Perturbation size check ||dH||_2 <= rho ||H||_2 (inclusive; ratios within
/// 4 ulp of rho count as equal).
BudgetCheck perturbation_budget_check(const ActivationMatrix& h, const Eigen::MatrixXd& dh,
                                      double rho);

/// Smallest tau2 with empirical survival S(x) <= 2 exp(-x / tau2) at every
/// sample point (plotting positions j / (N + 1)).
double fit_subexponential_tau2(std::span<const double> samples);

/// ||H_t^T H_t - Sigma||_2 for batches t = 1..count.
std::vector<double> gram_deviations(const GramStream& stream, std::uint64_t first,
                                    std::uint64_t count);

}  // namespace zdp
