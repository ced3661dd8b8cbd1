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
#include "zdp/rmt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

#include "zdp/error.hpp"
#include "zdp/random.hpp"
#include "zdp/stats.hpp"
#include "zdp/synth.hpp"

namespace zdp {

void ThresholdSpec::validate() const {
  detail::require(n >= 1, "n must be >= 1");
  detail::require(d >= 1, "d must be >= 1");
  detail::require(k >= 1 && k <= d, "k must satisfy 1 <= k <= d");
  detail::require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma2 must be > 0");
  detail::require(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 1/2)");
}

double ThresholdSpec::log_inv_alpha() const { return -std::log(alpha); }

bool ThresholdSpec::ratio_defined() const {
  const double x = log_inv_alpha();
  const double dd = static_cast<double>(d);
  return dd - 2.0 * std::sqrt(dd * x / static_cast<double>(n)) > 0.0;
}

namespace {

double lm_core(const ThresholdSpec& s) {
  const double x = s.log_inv_alpha();
  const double nn = static_cast<double>(s.n);
  const double kk = static_cast<double>(s.k);
  return kk + 2.0 * std::sqrt(kk * x / nn) + 2.0 * x / nn;
}

}  // namespace

double lm_numerator_threshold(const ThresholdSpec& spec) {
  spec.validate();
  return spec.sigma2 * lm_core(spec);
}

double mp_edge_threshold(const ThresholdSpec& spec) {
  spec.validate();
  const double nn = static_cast<double>(spec.n);
  const double t = std::sqrt(2.0 * spec.log_inv_alpha() / nn);
  const double gamma = static_cast<double>(spec.d) / nn;
  const double edge = 1.0 + std::sqrt(gamma) + t;
  return static_cast<double>(spec.k) * spec.sigma2 * edge * edge;
}

double snl_ratio_threshold(const ThresholdSpec& spec) {
  spec.validate();
  const double dd = static_cast<double>(spec.d);
  const double denom =
      dd - 2.0 * std::sqrt(dd * spec.log_inv_alpha() / static_cast<double>(spec.n));
  if (!(denom > 0.0)) detail::fail_argument("sample size too small for ratio bound");
  return lm_core(spec) / denom;
}

const char* to_string(Route route) {
  switch (route) {
    case Route::lm: return "lm";
    case Route::mp_edge: return "mp_edge";
    case Route::ratio: return "ratio";
  }
  return "?";
}

std::optional<Route> parse_route(std::string_view name) {
  for (Route r : kAllRoutes) {
    if (name == to_string(r)) return r;
  }
  if (name == "mp-edge") return Route::mp_edge;
  return std::nullopt;
}

double route_threshold(Route route, const ThresholdSpec& spec) {
  switch (route) {
    case Route::lm: return lm_numerator_threshold(spec);
    case Route::mp_edge: return mp_edge_threshold(spec);
    case Route::ratio: return snl_ratio_threshold(spec);
  }
  return 0.0;
}

double route_level(Route route, const ThresholdSpec& spec) {
  return route == Route::ratio ? 2.0 * spec.alpha : spec.alpha;
}

const char* to_string(Verdict verdict) { return verdict == Verdict::drift ? "drift" : "quiet"; }

AlarmResult drift_alarm(double value, const ThresholdSpec& spec, Route route) {
  detail::require(std::isfinite(value), "drift_alarm: value must be finite");
  AlarmResult r;
  r.route = route;
  r.value = value;
  r.threshold = route_threshold(route, spec);
  r.margin = value - r.threshold;
  r.verdict = value > r.threshold ? Verdict::drift : Verdict::quiet;
  return r;
}

double plug_in_sigma2(const Eigen::MatrixXd& x) {
  detail::require(x.cols() >= 1, "plug_in_sigma2: empty matrix");
  return x.squaredNorm() / static_cast<double>(x.cols());
}

const RouteCoverage& TailValidation::route(Route r) const {
  for (const auto& c : routes) {
    if (c.route == r) return c;
  }
  detail::fail_argument("route not present in validation result");
}

TailValidation tail_mc_validate(const ThresholdSpec& spec, long trials, std::uint64_t seed,
                                unsigned threads) {
  spec.validate();
  detail::require(trials >= 1000, "tail_mc_validate needs at least 1000 trials");

  const bool ratio_ok = spec.ratio_defined();
  const double t_lm = lm_numerator_threshold(spec);
  const double t_mp = mp_edge_threshold(spec);
  const double t_ratio = ratio_ok ? snl_ratio_threshold(spec) : 0.0;

  Philox basis_gen(RngSpec{seed, 2});
  const Eigen::MatrixXd v = haar_orthonormal(spec.d, spec.k, basis_gen);
  const double stddev = std::sqrt(spec.sigma2 / static_cast<double>(spec.n));
  const RngSpec root{seed, 0};

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, trials));
  std::vector<std::array<long, 3>> counts(threads, {0, 0, 0});

  auto worker = [&](unsigned w) {
    std::array<long, 3>& c = counts[w];
    for (long i = w; i < trials; i += threads) {
      Philox gen(root.substream(static_cast<std::uint64_t>(i)));
      const Eigen::MatrixXd x = gen.normal_matrix(spec.n, spec.d, stddev);
      const double energy = (x * v).squaredNorm();
      if (energy > t_lm) ++c[0];
      if (energy > t_mp) ++c[1];
      if (ratio_ok && energy / x.squaredNorm() > t_ratio) ++c[2];
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  std::array<long, 3> total{0, 0, 0};
  for (const auto& c : counts) {
    for (int j = 0; j < 3; ++j) total[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
  }

  TailValidation out;
  out.spec = spec;
  out.trials = trials;
  out.seed = seed;
  const double thresholds[3] = {t_lm, t_mp, t_ratio};
  for (std::size_t j = 0; j < 3; ++j) {
    RouteCoverage rc;
    rc.route = kAllRoutes[j];
    rc.available = rc.route != Route::ratio || ratio_ok;
    rc.threshold = thresholds[j];
    rc.nominal = route_level(rc.route, spec);
    rc.trials = trials;
    if (rc.available) {
      rc.exceedances = total[j];
      rc.rate = static_cast<double>(total[j]) / static_cast<double>(trials);
      rc.std_error = stats::binomial_stderr(rc.rate, trials);
      rc.interval = stats::wilson_interval(total[j], trials);
    }
    out.routes.push_back(rc);
  }
  return out;
}

}  // namespace zdp
