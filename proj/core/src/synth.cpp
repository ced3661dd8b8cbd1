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
#include "zdp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "zdp/error.hpp"

namespace zdp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ActivationMatrix gaussian_activations(Index n, Index d, double sigma2, RngSpec rng) {
  detail::require(n >= 1 && d >= 1, "gaussian_activations: n and d must be >= 1");
  detail::require(sigma2 > 0.0 && std::isfinite(sigma2), "gaussian_activations: sigma2 must be > 0");
  Philox gen(rng);
  return ActivationMatrix(gen.normal_matrix(n, d, std::sqrt(sigma2 / static_cast<double>(n))));
}

MatrixXd haar_orthonormal(Index d, Index r, Philox& gen) {
  detail::require(d >= 1 && r >= 0 && r <= d, "haar_orthonormal: need 0 <= r <= d");
  if (r == 0) return MatrixXd(d, 0);
  return thin_q(gen.normal_matrix(d, r), 1e-14);
}

namespace {

bool well_conditioned(const MatrixXd& m) {
  const VectorXd s = Eigen::JacobiSVD<MatrixXd>(m).singularValues();
  return s(s.size() - 1) > 1e-8 * s(0);
}

}  // namespace

RankDeficientBase rank_deficient_base(Index n, Index d, Index rank, RngSpec rng) {
  detail::require(n >= 1 && d >= 1, "rank_deficient_base: n and d must be >= 1");
  detail::require(rank >= 1 && rank <= std::min(n, d),
                  "rank_deficient_base: need 1 <= rank <= min(n, d)");
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    Philox gen(rng.substream(attempt));
    const MatrixXd l = gen.normal_matrix(n, rank);
    const MatrixXd r = gen.normal_matrix(d, rank);
    if (!well_conditioned(l) || !well_conditioned(r)) continue;
    MatrixXd v0 = orthogonal_complement(thin_q(r));
    return RankDeficientBase{ActivationMatrix(l * r.transpose()),
                             NullBasis(std::move(v0), 0.0, Side::right)};
  }
  throw NumericalError("rank_deficient_base: factors stayed rank deficient after 16 draws");
}

LoraFactors aligned_lowrank_factors(const MatrixXd& v0, Index r,
                                    std::span<const double> target_angles, double scale_a,
                                    double scale_b, RngSpec rng, FactorSpectrum spectrum) {
  const Index d = v0.rows();
  const Index k = v0.cols();
  detail::require(r >= 1 && r <= d, "aligned_lowrank_factors: need 1 <= r <= d");
  detail::require(orthonormality_error(v0) <= 1e-10, "aligned_lowrank_factors: V0 not orthonormal");
  const Index q = std::min(r, k);
  detail::require(static_cast<Index>(target_angles.size()) == q,
                  "aligned_lowrank_factors: infeasible angle count (need min(r, k) angles)");
  detail::require(r <= d - k, "aligned_lowrank_factors: need r <= d - k for the construction");
  for (double a : target_angles) {
    detail::require(a >= 0.0 && a <= std::numbers::pi / 2.0, "aligned_lowrank_factors: angles must lie in [0, pi/2]");
  }
  detail::require(scale_a >= 0.0 && scale_b >= 0.0, "aligned_lowrank_factors: scales must be >= 0");

  Philox gen(rng);
  const MatrixXd v_rot = k > 0 ? MatrixXd(v0 * haar_orthonormal(k, k, gen)) : MatrixXd(d, 0);
  const MatrixXd w = orthogonal_complement(v0) * haar_orthonormal(d - k, r, gen);

  MatrixXd ub(d, r);
  for (Index i = 0; i < r; ++i) {
    if (i < q) {
      const double th = target_angles[static_cast<std::size_t>(i)];
      ub.col(i) = std::cos(th) * v_rot.col(i) + std::sin(th) * w.col(i);
    } else {
      ub.col(i) = w.col(i);
    }
  }

  VectorXd sa(r), sb(r);
  for (Index i = 0; i < r; ++i) {
    sa(i) = i == 0 ? 1.0 : gen.uniform(0.1, 1.0);
    sb(i) = i == 0 ? 1.0 : gen.uniform(0.1, 1.0);
  }
  const MatrixXd ua = haar_orthonormal(d, r, gen);
  const MatrixXd rb = haar_orthonormal(r, r, gen);
  MatrixXd ra;
  if (spectrum == FactorSpectrum::aligned) {
    ra = rb;
    for (Index i = 0; i < q; ++i) {
      sa(i) = 1.0;
      sb(i) = 1.0;
    }
  } else {
    ra = haar_orthonormal(r, r, gen);
  }
  MatrixXd a = ua * (scale_a * sa).asDiagonal() * ra.transpose();
  MatrixXd b = ub * (scale_b * sb).asDiagonal() * rb.transpose();
  return LoraFactors(std::move(a), std::move(b));
}

GramStream::GramStream(StreamSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const Index d = spec_.d;
  const Index k = spec_.k;
  Philox gen(RngSpec{spec_.seed, 3});
  const MatrixXd q = haar_orthonormal(d, d, gen);
  null_ = q.leftCols(k);
  VectorXd roots(d - k);
  for (Index i = 0; i < d - k; ++i) roots(i) = std::sqrt(spec_.spectrum[static_cast<std::size_t>(i)]);
  root_ = q.rightCols(d - k) * roots.asDiagonal();
  sigma_ = symmetrized(root_ * root_.transpose());
}

MatrixXd GramStream::batch(std::uint64_t t) const {
  detail::require(t >= 1, "GramStream::batch: t starts at 1");
  Philox gen(RngSpec{spec_.seed, 4}.substream(t));
  const MatrixXd z = gen.normal_matrix(spec_.batch_rows, spec_.d - spec_.k);
  return z * root_.transpose() / std::sqrt(static_cast<double>(spec_.batch_rows));
}

BudgetCheck perturbation_budget_check(const ActivationMatrix& h, const MatrixXd& dh, double rho) {
  detail::require(dh.rows() == h.n_tokens() && dh.cols() == h.dim(),
                  "perturbation_budget_check: shape mismatch");
  detail::require(rho > 0.0 && rho < 1.0, "perturbation_budget_check: rho must lie in (0, 1)");
  const double base = spectral_norm(h.data());
  if (!(base > 0.0)) detail::fail_argument("perturbation_budget_check: base H is zero");
  BudgetCheck out;
  out.ratio = spectral_norm(dh) / base;
  out.within = out.ratio <= rho * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
  return out;
}

double fit_subexponential_tau2(std::span<const double> samples) {
  detail::require(!samples.empty(), "fit_subexponential_tau2: no samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end(), std::greater<>());
  const double n1 = static_cast<double>(xs.size() + 1);
  double tau2 = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (!(xs[j] > 0.0)) break;
    const double p = static_cast<double>(j + 1) / n1;
    tau2 = std::max(tau2, xs[j] / std::log(2.0 / p));
  }
  return tau2;
}

std::vector<double> gram_deviations(const GramStream& stream, std::uint64_t first,
                                    std::uint64_t count) {
  std::vector<double> out;
  out.reserve(count);
  for (std::uint64_t t = first; t < first + count; ++t) {
    const MatrixXd h = stream.batch(t);
    const MatrixXd dev = symmetrized(h.transpose() * h - stream.sigma());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(dev, Eigen::EigenvaluesOnly);
    out.push_back(eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace zdp
