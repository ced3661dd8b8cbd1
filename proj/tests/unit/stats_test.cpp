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
#include <vector>

#include "zdp/error.hpp"
#include "zdp/stats.hpp"

namespace zdp::stats {
namespace {

TEST(Stats, MeanStderr) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto r = mean_stderr(xs);
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(r.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(r.count, 4);
}

TEST(Stats, SingleSampleHasNoSpread) {
  const std::vector<double> xs{7.0};
  const auto r = mean_stderr(xs);
  EXPECT_EQ(r.mean, 7.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Stats, FitLineRecoversExactLine) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, 3, 5, 7};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  const std::vector<double> flat{2, 2};
  EXPECT_THROW(fit_line(flat, flat), InvalidArgument);
}

TEST(Stats, ThroughOrigin) {
  const std::vector<double> x{1, 2, 4};
  const std::vector<double> y{3, 6, 12};
  EXPECT_NEAR(fit_through_origin(x, y), 3.0, 1e-15);
}

TEST(Stats, LogLogSlope) {
  std::vector<double> x, y;
  for (double s : {1e-3, 1e-2, 1e-1}) {
    x.push_back(s);
    y.push_back(-5.0 * s * s * s);
  }
  EXPECT_NEAR(loglog_slope(x, y), 3.0, 1e-12);
}

TEST(Stats, WilsonIntervalContainsRate) {
  const auto [lo, hi] = wilson_interval(50, 1000);
  EXPECT_LT(lo, 0.05);
  EXPECT_GT(hi, 0.05);
  // Hand evaluation of the Wilson formula at p = 0.05, n = 1000, z = 1.96.
  EXPECT_NEAR(lo, 0.0381303, 1e-6);
  EXPECT_NEAR(hi, 0.0653138, 1e-6);
  const auto [zlo, zhi] = wilson_interval(0, 100);
  EXPECT_EQ(zlo, 0.0);
  EXPECT_GT(zhi, 0.0);
}

TEST(Stats, BinomialStderr) {
  EXPECT_NEAR(binomial_stderr(0.05, 100000), std::sqrt(0.05 * 0.95 / 1e5), 1e-18);
}

}  // namespace
}  // namespace zdp::stats
