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
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace zdp {

/// Inputs to the Gaussian-null alarm thresholds.
struct ThresholdSpec {
  Eigen::Index n = 1;
  Eigen::Index d = 1;
  Eigen::Index k = 1;
  double sigma2 = 1.0;
  double alpha = 0.05;

  /// alpha in (0, 1/2), 1 <= k <= d, n >= 1, sigma2 > 0.
  void validate() const;
  /// d - 2 sqrt(d ln(1/alpha) / n) > 0.
  [[nodiscard]] bool ratio_defined() const;
  [[nodiscard]] double log_inv_alpha() const;
};

/// sigma2 [k + 2 sqrt(k x / n) + 2 x / n], x = ln(1/alpha).
double lm_numerator_threshold(const ThresholdSpec& spec);

/// k sigma2 (1 + sqrt(d/n) + t)^2 with t = sqrt(2 ln(1/alpha) / n).
double mp_edge_threshold(const ThresholdSpec& spec);

/// [k + 2 sqrt(k x/n) + 2x/n] / [d - 2 sqrt(d x/n)]; sigma2-free, holds at
/// level 1 - 2 alpha. Throws InvalidArgument when the denominator is <= 0.
double snl_ratio_threshold(const ThresholdSpec& spec);

enum class Route { lm, mp_edge, ratio };
const char* to_string(Route route);
std::optional<Route> parse_route(std::string_view name);
inline constexpr Route kAllRoutes[] = {Route::lm, Route::mp_edge, Route::ratio};

double route_threshold(Route route, const ThresholdSpec& spec);
/// Nominal false-alarm level of a route: alpha, or 2 alpha for the ratio.
double route_level(Route route, const ThresholdSpec& spec);

enum class Verdict { quiet, drift };
const char* to_string(Verdict verdict);

struct AlarmResult {
  Route route = Route::ratio;
  Verdict verdict = Verdict::quiet;
  double value = 0.0;
  double threshold = 0.0;
  double margin = 0.0;  ///< value - threshold
};

/// lm and mp_edge compare raw null energy ||X V||_F^2; ratio compares SNL.
/// Alarm on strict exceedance.
AlarmResult drift_alarm(double value, const ThresholdSpec& spec, Route route);

/// Plug-in variance estimate ||X||_F^2 / d.
double plug_in_sigma2(const Eigen::MatrixXd& x);

struct RouteCoverage {
  Route route = Route::lm;
  bool available = true;  ///< false when the ratio bound is undefined
  double threshold = 0.0;
  double nominal = 0.0;
  long exceedances = 0;
  long trials = 0;
  double rate = 0.0;
  double std_error = 0.0;
  std::pair<double, double> interval{0.0, 0.0};  ///< 95% Wilson
};

struct TailValidation {
  ThresholdSpec spec;
  long trials = 0;
  std::uint64_t seed = 0;
  std::vector<RouteCoverage> routes;

  [[nodiscard]] const RouteCoverage& route(Route r) const;
};

/// Monte Carlo exceedance of each threshold under the exact Gaussian null
/// (X with i.i.d. N(0, sigma2/n) entries, V a fixed Haar basis). Trial i
/// draws from RngSpec{seed, 0}.substream(i), so results do not depend on
/// the thread count. Requires trials >= 1000.
TailValidation tail_mc_validate(const ThresholdSpec& spec, long trials, std::uint64_t seed,
                                unsigned threads = 0);

}  // namespace zdp
