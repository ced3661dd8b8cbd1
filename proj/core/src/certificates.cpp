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
#include "zdp/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "zdp/error.hpp"
#include "zdp/random.hpp"
#include "zdp/stats.hpp"
#include "zdp/synth.hpp"

namespace zdp {

using Eigen::Index;
using Eigen::MatrixXd;

LoraFactors::LoraFactors(MatrixXd a, MatrixXd b) : a_(std::move(a)), b_(std::move(b)) {
  detail::require(a_.rows() == b_.rows() && a_.cols() == b_.cols(),
                  "LoRA factors must have identical shapes");
  detail::require(a_.cols() >= 1, "LoRA rank must be positive");
  detail::require(a_.cols() <= a_.rows(), "LoRA rank must not exceed d");
  detail::require(a_.allFinite() && b_.allFinite(), "LoRA factors contain NaN or Inf");
}

CertificateResult check_bounds(double quantity, std::optional<double> lower,
                               std::optional<double> upper, double relative_tol,
                               double absolute_tol) {
  CertificateResult r;
  r.quantity = quantity;
  r.lower_bound = lower;
  r.upper_bound = upper;
  double scale = std::abs(quantity);
  if (lower) scale = std::max(scale, std::abs(*lower));
  if (upper) scale = std::max(scale, std::abs(*upper));
  const double tol = relative_tol * std::max(scale, 1.0e-300) + absolute_tol;
  double slack = std::numeric_limits<double>::infinity();
  if (lower) slack = std::min(slack, quantity - *lower);
  if (upper) slack = std::min(slack, *upper - quantity);
  if (!lower && !upper) slack = 0.0;
  r.slack = slack;
  r.satisfied = std::isfinite(quantity) && slack >= -tol;
  return r;
}

namespace {

double sigma_max(const MatrixXd& m) { return spectral_norm(m); }

bool leq_rel(double a, double b) {
  return a <= b + kCertificateTolerance * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

VarianceLeakCertificate variance_leak_certificate(const ActivationMatrix& h, const MatrixXd& dh,
                                                  const NullBasis& v0) {
  detail::require(dh.rows() == h.n_tokens() && dh.cols() == h.dim(),
                  "variance-leak: dH shape must match H");
  detail::require(dh.allFinite(), "variance-leak: dH contains NaN or Inf");
  detail::require(v0.side() == Side::right && v0.ambient_dim() == h.dim(),
                  "variance-leak: null basis does not match H");
  const double h_norm = h.data().norm();
  const double residual = (h.data() * v0.basis()).norm();
  if (residual > 1e-8 * std::max(h_norm, 1e-300) && residual > 0.0) {
    detail::fail_argument("variance-leak: basis is not in ker(H) (relative residual " +
                          std::to_string(residual / h_norm) + ")");
  }

  VarianceLeakCertificate c;
  c.k = v0.k();
  const MatrixXd g = symmetrized(dh.transpose() * dh);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  c.lambda_min = std::max(eig.eigenvalues()(0), 0.0);
  c.lambda_max = std::max(eig.eigenvalues()(g.rows() - 1), 0.0);
  c.nvl = ((h.data() + dh) * v0.basis()).squaredNorm();
  const double kk = static_cast<double>(c.k);
  c.nvl_per_direction = c.k > 0 ? c.nvl / kk : 0.0;
  // H V0 is zero only to rounding; its cross terms with dH V0 are not in the bounds.
  const double e = (dh * v0.basis()).norm();
  c.result = check_bounds(c.nvl, kk * c.lambda_min, kk * c.lambda_max, kCertificateTolerance,
                          residual * residual + 2.0 * residual * e);
  return c;
}

MatrixXd column_space_basis(const MatrixXd& b) {
  if (b.size() == 0 || b.norm() == 0.0) return MatrixXd(b.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(b.rows(), b.cols())) * std::numeric_limits<double>::epsilon() * s(0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

RankLeakCertificate rank_leak_certificate(const LoraFactors& factors, const MatrixXd& v0) {
  detail::require(v0.rows() == factors.d(), "rank-leak: basis dimension does not match factors");
  detail::require(orthonormality_error(v0) <= 1e-8, "rank-leak: basis is not orthonormal");
  RankLeakCertificate c;
  c.sigma_max_a = sigma_max(factors.a());
  c.sigma_max_b = sigma_max(factors.b());
  const MatrixXd btv = factors.b().transpose() * v0;
  c.leak = (factors.a() * btv).norm();
  c.intermediate_bound = c.sigma_max_a * btv.norm();

  const MatrixXd ub = column_space_basis(factors.b());
  if (ub.cols() == 0) {
    c.degenerate = true;
    c.result = check_bounds(c.leak, std::nullopt, c.intermediate_bound);
    return c;
  }
  const MatrixXd overlap = ub.transpose() * v0;
  c.overlap_sq = overlap.squaredNorm();
  c.outer_bound = c.sigma_max_a * c.sigma_max_b * std::sqrt(c.overlap_sq);
  if (v0.cols() > 0) c.angles = principal_angles(ub, v0);
  for (double a : c.angles) c.cos2_sum += std::cos(a) * std::cos(a);
  c.chain_ordered = leq_rel(c.leak, c.intermediate_bound) && leq_rel(c.intermediate_bound, c.outer_bound);
  c.result = check_bounds(c.leak, std::nullopt, c.intermediate_bound);
  c.result.satisfied = c.result.satisfied && c.chain_ordered;
  return c;
}

RankLeakCertificate rank_leak_certificate(const LoraFactors& factors, const NullBasis& v0) {
  return rank_leak_certificate(factors, v0.basis());
}

double expected_overlap(Index d, Index r, Index k) {
  detail::require(d >= 1 && r >= 0 && k >= 0 && r <= d && k <= d,
                  "expected_overlap: need r, k <= d");
  return static_cast<double>(r) * static_cast<double>(k) / static_cast<double>(d);
}

bool OverlapEstimate::within(double n_stderr) const {
  return std::abs(mean - expected) <= n_stderr * std_error;
}

OverlapEstimate mc_overlap(Index d, Index r, Index k, long trials, std::uint64_t seed,
                           unsigned threads) {
  OverlapEstimate out;
  out.expected = expected_overlap(d, r, k);
  detail::require(trials >= 2, "mc_overlap needs at least two trials");
  out.trials = trials;
  std::vector<double> samples(static_cast<std::size_t>(trials));
  const RngSpec root{seed, 1};
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, trials));
  auto worker = [&](unsigned w) {
    for (long i = w; i < trials; i += threads) {
      Philox gen(root.substream(static_cast<std::uint64_t>(i)));
      const MatrixXd u = haar_orthonormal(d, r, gen);
      const MatrixXd v = haar_orthonormal(d, k, gen);
      samples[static_cast<std::size_t>(i)] = (u.transpose() * v).squaredNorm();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  const auto ms = stats::mean_stderr(samples);
  out.mean = ms.mean;
  out.std_error = ms.std_error;
  return out;
}

DkResidualCertificate dk_residual_certificate(const ActivationMatrix& h_hat,
                                              const NullBasis& v_true, const NullBasis& v_est,
                                              const MatrixXd& dh) {
  detail::require(v_true.k() == v_est.k(), "dk-residual: bases must have equal k");
  detail::require(v_true.ambient_dim() == h_hat.dim() && v_est.ambient_dim() == h_hat.dim(),
                  "dk-residual: basis dimension does not match activations");
  detail::require(dh.cols() == h_hat.dim(), "dk-residual: dH width does not match");
  DkResidualCertificate c;
  c.leak_estimated = (h_hat.data() * v_est.basis()).squaredNorm();
  c.leak_true = (h_hat.data() * v_true.basis()).squaredNorm();
  c.gram_norm = spectral_norm(dh.transpose() * dh);
  const double s = sin_theta_distance(v_est, v_true);
  c.sin_theta_sq = s * s;
  c.correction = 2.0 * c.gram_norm * c.sin_theta_sq;
  c.result = check_bounds(c.leak_estimated, c.leak_true - c.correction,
                          c.leak_true + c.correction);
  const double tol = kCertificateTolerance *
                     std::max({c.leak_estimated, c.leak_true + c.correction, 1e-300});
  c.one_sided_holds = c.leak_estimated <= c.leak_true + c.correction + tol;
  c.two_sided_holds = std::abs(c.leak_estimated - c.leak_true) <= c.correction + tol;
  return c;
}

TraceSandwichCertificate projector_trace_sandwich(const Projector& p, const Projector& pstar,
                                                  const MatrixXd& sigma, double delta,
                                                  double lipschitz) {
  const Index d = p.dim();
  detail::require(pstar.dim() == d && sigma.rows() == d && sigma.cols() == d,
                  "trace-sandwich: dimension mismatch");
  detail::require(p.rank() == pstar.rank(), "trace-sandwich: projectors must have equal rank");
  detail::require(delta > 0.0 && delta <= lipschitz, "trace-sandwich: need 0 < delta <= L");
  detail::require(sigma.allFinite(), "trace-sandwich: Sigma contains NaN or Inf");
  const double sigma_scale = std::max(sigma.norm(), 1e-300);
  detail::require((sigma - sigma.transpose()).norm() <= 1e-10 * sigma_scale,
                  "trace-sandwich: Sigma is not symmetric");
  detail::require((sigma * pstar.matrix()).norm() <= 1e-8 * sigma_scale,
                  "trace-sandwich: im(P*) is not inside ker(Sigma)");
  const MatrixXd sym = symmetrized(sigma);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const auto& lam = eig.eigenvalues();
  const Index k = pstar.rank();
  for (Index i = k; i < d; ++i) {
    detail::require(lam(i) >= delta * (1.0 - 1e-9) && lam(i) <= lipschitz * (1.0 + 1e-9),
                    "trace-sandwich: nonzero spectrum of Sigma leaves [delta, L]");
  }

  TraceSandwichCertificate c;
  const MatrixXd diff = p.matrix() - pstar.matrix();
  c.trace_p_sigma = (p.matrix() * sym).trace();
  c.trace_diff_sigma = (diff * sym).trace();
  c.projector_distance_sq = diff.squaredNorm();
  c.lower = 0.5 * delta * c.projector_distance_sq;
  c.upper = 0.5 * lipschitz * c.projector_distance_sq;
  const MatrixXd pi = MatrixXd::Identity(d, d) - pstar.matrix();
  c.identity_residual = std::abs((pi * p.matrix() * pi).trace() - 0.5 * c.projector_distance_sq);
  const double rounding = 8.0 * static_cast<double>(d) * std::numeric_limits<double>::epsilon() * sym.norm();
  c.result = check_bounds(c.trace_p_sigma, c.lower, c.upper, kCertificateTolerance, rounding);
  return c;
}

double heuristic_snl_increase(const LoraFactors& factors, Index d, Index k, double frob_hhat_sq) {
  detail::require(frob_hhat_sq > 0.0, "heuristic SNL increase needs ||H_hat||_F^2 > 0");
  const double sa = sigma_max(factors.a());
  const double sb = sigma_max(factors.b());
  return sa * sa * sb * sb * expected_overlap(d, factors.r(), k) / frob_hhat_sq;
}

}  // namespace zdp
