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
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "zdp/certificates.hpp"
#include "zdp/error.hpp"
#include "zdp/synth.hpp"

namespace zdp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
constexpr double kHalfPi = std::numbers::pi / 2;

TEST(CheckBounds, ToleranceAndSlack) {
  EXPECT_TRUE(check_bounds(1.0, 0.0, 2.0).satisfied);
  EXPECT_NEAR(check_bounds(1.0, 0.0, 2.0).slack, 1.0, 0.0);
  EXPECT_TRUE(check_bounds(1.0 + 1e-12, std::nullopt, 1.0).satisfied);
  EXPECT_FALSE(check_bounds(1.0 + 1e-6, std::nullopt, 1.0).satisfied);
  EXPECT_FALSE(check_bounds(-0.1, 0.0, std::nullopt).satisfied);
}

TEST(LoraFactors, Validation) {
  EXPECT_THROW(LoraFactors(MatrixXd::Ones(3, 2), MatrixXd::Ones(3, 1)), InvalidArgument);
  EXPECT_THROW(LoraFactors(MatrixXd::Ones(2, 3), MatrixXd::Ones(2, 3)), InvalidArgument);
  const LoraFactors f(MatrixXd::Ones(3, 1), 2.0 * MatrixXd::Ones(3, 1));
  EXPECT_EQ(f.update(), 2.0 * MatrixXd::Ones(3, 3));
}

TEST(VarianceLeak, ZeroPerturbation) {
  const auto base = rank_deficient_base(30, 8, 5, RngSpec{1, 0});
  const auto c = variance_leak_certificate(base.h, MatrixXd::Zero(30, 8), base.null);
  EXPECT_TRUE(c.result.satisfied);
  EXPECT_LE(c.nvl, 1e-24);
}

TEST(VarianceLeak, IsotropicIsTightBothSides) {
  const auto base = rank_deficient_base(30, 8, 5, RngSpec{2, 0});
  Philox gen(RngSpec{2, 1});
  const MatrixXd dh = oracle::isotropic_perturbation(30, 8, 0.5, gen);
  const auto c = variance_leak_certificate(base.h, dh, base.null);
  EXPECT_TRUE(c.result.satisfied);
  EXPECT_NEAR(c.nvl, 3 * 0.25, 1e-9 * 0.75);
  EXPECT_NEAR(*c.result.lower_bound, c.nvl, 1e-9 * c.nvl);
  EXPECT_NEAR(*c.result.upper_bound, c.nvl, 1e-9 * c.nvl);
  EXPECT_NEAR(c.nvl_per_direction, 0.25, 1e-12);
}

TEST(VarianceLeak, PerDirectionValueIsBetweenExtremes) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto base = rank_deficient_base(50, 10, 6, RngSpec{s, 30});
    Philox gen(RngSpec{s, 31});
    const auto c = variance_leak_certificate(base.h, gen.normal_matrix(50, 10, 0.2), base.null);
    ASSERT_TRUE(c.result.satisfied) << s;
    EXPECT_LE(c.lambda_min, c.nvl_per_direction * (1 + 1e-9));
    EXPECT_GE(c.lambda_max, c.nvl_per_direction * (1 - 1e-9));
  }
}

// NVL >= eps does not force lambda_min(G) >= eps / k.
TEST(VarianceLeak, LargeLeakDoesNotBoundSmallestEigenvalue) {
  MatrixXd h = MatrixXd::Zero(2, 2);
  h(1, 1) = 1.0;
  MatrixXd dh = MatrixXd::Zero(2, 2);
  dh(0, 0) = 1.0;  // G = diag(1, 0)
  const NullBasis v0(MatrixXd::Identity(2, 1), 0.0, Side::right);
  const auto c = variance_leak_certificate(ActivationMatrix(h), dh, v0);
  EXPECT_TRUE(c.result.satisfied);
  EXPECT_EQ(c.nvl, 1.0);
  EXPECT_EQ(c.lambda_min, 0.0);
}

TEST(VarianceLeak, RejectsBasisOutsideKernel) {
  const NullBasis v0(MatrixXd::Identity(2, 1), 0.0, Side::right);
  EXPECT_THROW(variance_leak_certificate(ActivationMatrix(MatrixXd::Identity(2, 2)),
                                         MatrixXd::Zero(2, 2), v0),
               InvalidArgument);
}

TEST(RankLeak, OrthogonalFixtureHasNoLeak) {
  const auto base = rank_deficient_base(30, 12, 9, RngSpec{3, 0});
  const std::vector<double> angles(2, kHalfPi);
  const auto f = aligned_lowrank_factors(base.null.basis(), 2, angles, 1.5, 0.7, RngSpec{3, 1});
  const auto c = rank_leak_certificate(f, base.null);
  EXPECT_LE(c.leak, 1e-12);
  EXPECT_TRUE(c.result.satisfied);
}

TEST(RankLeak, AlignedFixtureIsAllEqual) {
  const auto base = rank_deficient_base(30, 12, 9, RngSpec{4, 0});
  const std::vector<double> angles{0.0, 0.0};
  const auto f = aligned_lowrank_factors(base.null.basis(), 2, angles, 1.5, 0.7, RngSpec{4, 1},
                                         FactorSpectrum::aligned);
  const auto c = rank_leak_certificate(f, base.null);
  EXPECT_NEAR(c.leak, c.intermediate_bound, 1e-9 * c.outer_bound);
  EXPECT_NEAR(c.intermediate_bound, c.outer_bound, 1e-9 * c.outer_bound);
  EXPECT_NEAR(c.outer_bound, 1.5 * 0.7 * std::sqrt(2.0), 1e-9);
}

TEST(RankLeak, AlignedWithMixedAngles) {
  const auto base = rank_deficient_base(40, 16, 10, RngSpec{5, 0});
  const std::vector<double> angles{0.3, 1.1, 0.0, 0.7};
  const auto f = aligned_lowrank_factors(base.null.basis(), 4, angles, 2.0, 0.5, RngSpec{5, 1},
                                         FactorSpectrum::aligned);
  const auto c = rank_leak_certificate(f, base.null);
  EXPECT_NEAR(c.leak, c.outer_bound, 1e-9 * c.outer_bound);
  const double expected = std::pow(std::cos(0.3), 2) + std::pow(std::cos(1.1), 2) + 1.0 +
                          std::pow(std::cos(0.7), 2);
  EXPECT_NEAR(c.overlap_sq, expected, 1e-10);
  EXPECT_NEAR(c.cos2_sum, expected, 1e-10);
  ASSERT_EQ(c.angles.size(), 4u);
  EXPECT_NEAR(c.angles[0], 0.0, 1e-8);
  EXPECT_NEAR(c.angles[1], 0.3, 1e-8);
  EXPECT_NEAR(c.angles[2], 0.7, 1e-8);
  EXPECT_NEAR(c.angles[3], 1.1, 1e-8);
}

TEST(RankLeak, ChainHoldsOnRandomInstances) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Philox gen(RngSpec{s, 40});
    const MatrixXd v0 = haar_orthonormal(16, 5, gen);
    const LoraFactors f(gen.normal_matrix(16, 3), gen.normal_matrix(16, 3));
    const auto c = rank_leak_certificate(f, v0);
    ASSERT_TRUE(c.result.satisfied) << s;
    EXPECT_TRUE(c.chain_ordered);
    EXPECT_NEAR(c.overlap_sq, c.cos2_sum, 1e-10);
  }
}

TEST(RankLeak, ZeroBIsDegenerate) {
  const LoraFactors f(MatrixXd::Ones(4, 1), MatrixXd::Zero(4, 1));
  const auto c = rank_leak_certificate(f, MatrixXd::Identity(4, 2));
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.leak, 0.0);
  EXPECT_TRUE(c.result.satisfied);
}

TEST(Overlap, ClosedForm) {
  EXPECT_EQ(expected_overlap(12, 2, 3), 0.5);
  EXPECT_EQ(expected_overlap(10, 10, 4), 4.0);
  EXPECT_THROW(expected_overlap(4, 5, 1), InvalidArgument);
}

TEST(Overlap, FullSpanGivesK) {
  const auto e = mc_overlap(6, 6, 2, 50, 1);
  EXPECT_NEAR(e.mean, 2.0, 1e-12);
}

TEST(Overlap, MonteCarloWithinThreeStderr) {
  const auto e = mc_overlap(12, 2, 3, 20000, 5);
  EXPECT_TRUE(e.within(3.0)) << e.mean << " +- " << e.std_error;
  const auto f = mc_overlap(64, 4, 8, 20000, 6);
  EXPECT_NEAR(f.mean, 0.5, 0.01);
}

TEST(Overlap, ThreadCountDoesNotChangeResult) {
  const auto a = mc_overlap(10, 2, 3, 500, 9, 1);
  const auto b = mc_overlap(10, 2, 3, 500, 9, 4);
  EXPECT_EQ(a.mean, b.mean);
}

TEST(DkResidual, IdenticalBasesDifferByZero) {
  const auto base = rank_deficient_base(30, 8, 5, RngSpec{7, 0});
  Philox gen(RngSpec{7, 1});
  const MatrixXd dh = gen.normal_matrix(30, 8, 0.1);
  const auto c = dk_residual_certificate(ActivationMatrix(base.h.data() + dh), base.null, base.null, dh);
  EXPECT_EQ(c.leak_estimated, c.leak_true);
  EXPECT_LE(c.correction, 1e-25);
  EXPECT_TRUE(c.two_sided_holds);
}

// Fixtures put H_hat = dH with H_hat V0 = 0, where the residual bound follows
// from ||H_hat V_est||_F <= ||H_hat||_2 ||sin Theta||_F. Rotating the basis by
// theta then changes the leak by O(theta^2).
TEST(DkResidual, PlaneRotationScalesQuadratically) {
  Philox gen(RngSpec{8, 0});
  MatrixXd dh = gen.normal_matrix(20, 6, 0.3);
  dh.col(0).setZero();
  const NullBasis v(oracle::plane_rotation(6, 0.0), 0.0, Side::right);
  std::vector<double> thetas{1e-3, 1e-2, 1e-1}, diffs;
  for (double th : thetas) {
    const NullBasis w(oracle::plane_rotation(6, th), 0.0, Side::right);
    const auto c = dk_residual_certificate(ActivationMatrix(dh), v, w, dh);
    EXPECT_TRUE(c.two_sided_holds);
    EXPECT_NEAR(c.sin_theta_sq, std::sin(th) * std::sin(th), 1e-15);
    diffs.push_back(std::abs(c.leak_estimated - c.leak_true));
  }
  EXPECT_NEAR(std::log(diffs[2] / diffs[0]) / std::log(100.0), 2.0, 0.2);
}

TEST(DkResidual, RandomPerturbationsOfBasis) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Philox gen(RngSpec{s, 50});
    const MatrixXd v0 = haar_orthonormal(10, 3, gen);
    const MatrixXd dh =
        gen.normal_matrix(25, 10, 0.5) * (MatrixXd::Identity(10, 10) - v0 * v0.transpose());
    const MatrixXd ve = thin_q(v0 + 0.05 * gen.normal_matrix(10, 3));
    const auto c = dk_residual_certificate(ActivationMatrix(dh), NullBasis(v0, 0.0, Side::right),
                                           NullBasis(ve, 0.0, Side::right), dh);
    ASSERT_TRUE(c.result.satisfied) << s;
    EXPECT_TRUE(c.one_sided_holds);
  }
}

// With H V_est != 0 the residual bound has no term for the base leak.
TEST(DkResidual, BaseLeakThroughEstimateIsNotCovered) {
  const auto base = rank_deficient_base(30, 8, 5, RngSpec{9, 0});
  const MatrixXd dh = MatrixXd::Zero(30, 8);
  const MatrixXd ve = thin_q(base.null.basis() + 0.05 * Philox(RngSpec{9, 1}).normal_matrix(8, 3));
  const auto c = dk_residual_certificate(base.h, base.null, NullBasis(ve, 0.0, Side::right), dh);
  EXPECT_GT(c.leak_estimated, 0.0);
  EXPECT_EQ(c.correction, 0.0);
  EXPECT_FALSE(c.one_sided_holds);
}

TEST(DkResidual, MismatchedK) {
  const NullBasis a(MatrixXd::Identity(4, 1), 0.0, Side::right);
  const NullBasis b(MatrixXd::Identity(4, 2), 0.0, Side::right);
  EXPECT_THROW(dk_residual_certificate(ActivationMatrix(MatrixXd::Ones(2, 4)), a, b, MatrixXd::Zero(2, 4)),
               InvalidArgument);
}

struct SandwichFixture {
  Projector pstar;
  MatrixXd q;  // d x d orthogonal, first k columns span im(P*)
};

SandwichFixture sandwich_fixture(Eigen::Index d, Eigen::Index k, Philox& gen) {
  const MatrixXd q = haar_orthonormal(d, d, gen);
  return {projector_from_basis(MatrixXd(q.leftCols(k))), q};
}

TEST(TraceSandwich, EqualProjectorsGiveZeros) {
  Philox gen(RngSpec{10, 0});
  const auto fx = sandwich_fixture(6, 2, gen);
  VectorXd lam(6);
  lam << 0, 0, 1, 2, 3, 4;
  const MatrixXd sigma = oracle::with_spectrum(fx.q, lam);
  const auto c = projector_trace_sandwich(fx.pstar, fx.pstar, sigma, 1.0, 4.0);
  EXPECT_NEAR(c.trace_p_sigma, 0.0, 1e-14);
  EXPECT_NEAR(c.projector_distance_sq, 0.0, 1e-14);
  EXPECT_TRUE(c.result.satisfied);
}

TEST(TraceSandwich, FlatSpectrumMakesUpperTight) {
  Philox gen(RngSpec{11, 0});
  const auto fx = sandwich_fixture(6, 2, gen);
  const double L = 2.5;
  const MatrixXd sigma = L * (MatrixXd::Identity(6, 6) - fx.pstar.matrix());
  MatrixXd rotated = fx.q.leftCols(2);
  rotated.col(0) = std::cos(0.4) * fx.q.col(0) + std::sin(0.4) * fx.q.col(4);
  const auto c = projector_trace_sandwich(projector_from_basis(rotated), fx.pstar, sigma, L, L);
  EXPECT_NEAR(c.trace_p_sigma, c.upper, 1e-12);
  EXPECT_NEAR(c.trace_p_sigma, L * std::sin(0.4) * std::sin(0.4), 1e-12);
  EXPECT_TRUE(c.result.satisfied);
}

TEST(TraceSandwich, RandomSpectraHold) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Philox gen(RngSpec{s, 60});
    const auto fx = sandwich_fixture(8, 3, gen);
    VectorXd lam = VectorXd::Zero(8);
    for (int i = 3; i < 8; ++i) lam(i) = gen.uniform(0.5, 3.0);
    lam(3) = 0.5;
    lam(7) = 3.0;
    const MatrixXd sigma = oracle::with_spectrum(fx.q, lam);
    const Projector p = projector_from_basis(haar_orthonormal(8, 3, gen));
    const auto c = projector_trace_sandwich(p, fx.pstar, sigma, 0.5, 3.0);
    ASSERT_TRUE(c.result.satisfied) << s;
    EXPECT_LE(c.identity_residual, 1e-12);
    EXPECT_NEAR(c.trace_diff_sigma, c.trace_p_sigma, 1e-12);
  }
}

TEST(TraceSandwich, PreconditionsEnforced) {
  Philox gen(RngSpec{12, 0});
  const auto fx = sandwich_fixture(5, 2, gen);
  const MatrixXd sigma = MatrixXd::Identity(5, 5);  // kernel is empty
  EXPECT_THROW(projector_trace_sandwich(fx.pstar, fx.pstar, sigma, 1.0, 1.0), InvalidArgument);
  const MatrixXd good = MatrixXd::Identity(5, 5) - fx.pstar.matrix();
  EXPECT_THROW(projector_trace_sandwich(fx.pstar, fx.pstar, good, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(projector_trace_sandwich(fx.pstar, fx.pstar, good, 0.5, 0.8), InvalidArgument);
}

TEST(HeuristicSnl, ClosedForms) {
  const LoraFactors unit(MatrixXd::Identity(12, 2), MatrixXd::Identity(12, 2));
  EXPECT_NEAR(heuristic_snl_increase(unit, 12, 3, 10.0), 0.05, 1e-15);
  const LoraFactors zero(MatrixXd::Zero(12, 2), MatrixXd::Identity(12, 2));
  EXPECT_EQ(heuristic_snl_increase(zero, 12, 3, 10.0), 0.0);
  const LoraFactors scaled(3.0 * MatrixXd::Identity(12, 2), MatrixXd::Identity(12, 2));
  EXPECT_NEAR(heuristic_snl_increase(scaled, 12, 3, 10.0), 9 * 0.05, 1e-14);
  EXPECT_THROW(heuristic_snl_increase(unit, 12, 3, 0.0), InvalidArgument);
}

}  // namespace
}  // namespace zdp
