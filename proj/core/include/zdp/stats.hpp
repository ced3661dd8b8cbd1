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

#include <span>
#include <utility>

namespace zdp::stats {

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  double stddev = 0.0;
  long count = 0;
};

MeanStderr mean_stderr(std::span<const double> xs);

/// Ordinary least squares y ~ slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least squares y ~ c * x with no intercept.
double fit_through_origin(std::span<const double> x, std::span<const double> y);

/// Slope of log|y| against log x. Entries with y == 0 are rejected.
double loglog_slope(std::span<const double> x, std::span<const double> y);

double binomial_stderr(double rate, long trials);

/// 95% Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long successes, long trials, double z = 1.959963984540054);

}  // namespace zdp::stats
