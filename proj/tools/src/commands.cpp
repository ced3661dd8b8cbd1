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
#include <cmath>
#include <fstream>
#include <ostream>
#include <span>

#include "commands.hpp"
#include "zdp/certificates.hpp"
#include "zdp/error.hpp"
#include "zdp/fisher.hpp"
#include "zdp/matrix_io.hpp"
#include "zdp/nullspace.hpp"
#include "zdp/online.hpp"
#include "zdp/probes.hpp"
#include "zdp/random.hpp"
#include "zdp/rmt.hpp"
#include "zdp/synth.hpp"

#include "zdp/cli/cli.hpp"

namespace zdp::cli {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd load(const std::string& path, const char* flag) {
  detail::require(!path.empty(), std::string("missing --") + flag);
  return read_matrix(path);
}

CutoffPolicy policy(const std::optional<double>& cutoff) {
  if (!cutoff) return CutoffPolicy::standard();
  detail::require(*cutoff >= 0.0, "--cutoff must be >= 0");
  return CutoffPolicy::absolute(*cutoff);
}

std::vector<Route> selected_routes(const std::string& name) {
  if (name == "all") return {std::begin(kAllRoutes), std::end(kAllRoutes)};
  const auto r = parse_route(name);
  detail::require(r.has_value(), "unknown route '" + name + "' (lm, mp_edge, ratio, all)");
  return {*r};
}

Json to_json(const CertificateResult& r) {
  Json j;
  j["quantity"] = r.quantity;
  j["lower_bound"] = r.lower_bound ? Json(*r.lower_bound) : Json(nullptr);
  j["upper_bound"] = r.upper_bound ? Json(*r.upper_bound) : Json(nullptr);
  j["slack"] = r.slack;
  j["satisfied"] = r.satisfied;
  return j;
}

Json spec_json(const ThresholdSpec& s) {
  return Json{{"n", s.n},
              {"d", s.d},
              {"k", s.k},
              {"alpha", s.alpha},
              {"sigma2", s.sigma2},
              {"x", s.log_inv_alpha()}};
}

int certificate_exit(bool satisfied, Context& ctx) {
  if (satisfied) return kExitOk;
  ctx.err << "zdp certify: certificate not satisfied\n";
  return kExitError;
}

Projector projector_from_matrix(const MatrixXd& p, const char* flag) {
  detail::require(p.rows() == p.cols(), std::string("--") + flag + " must be square");
  const double tr = p.trace();
  const auto rank = static_cast<Index>(std::llround(tr));
  detail::require(std::abs(tr - static_cast<double>(rank)) <= 1e-6,
                  std::string("--") + flag + " trace is not an integer; not a projector");
  return Projector(p, rank);
}

}  // namespace

int cmd_probe(const ProbeArgs& a, Context& ctx) {
  const MatrixXd base = load(a.base, "base");
  const MatrixXd pert = load(a.perturbed, "perturbed");
  detail::require(base.rows() == pert.rows() && base.cols() == pert.cols(),
                  "dimension mismatch: base is " + std::to_string(base.rows()) + "x" +
                      std::to_string(base.cols()) + ", perturbed is " +
                      std::to_string(pert.rows()) + "x" + std::to_string(pert.cols()));
  const auto routes = selected_routes(a.route);
  const NullBasis v0 = null_basis(ActivationMatrix(base), policy(a.cutoff));
  if (v0.k() == 0) detail::fail_argument("base has a trivial null space (k = 0); nothing to probe");

  const ActivationMatrix hh(pert, a.layer);
  const ProbeReport r = probe_report(hh, v0);
  ThresholdSpec spec;
  spec.n = pert.rows();
  spec.d = pert.cols();
  spec.k = v0.k();
  spec.alpha = a.alpha;
  spec.sigma2 = a.sigma2 ? *a.sigma2 : plug_in_sigma2(pert);
  spec.validate();

  Json doc = envelope(ctx);
  Json probe;
  probe["layer"] = r.layer_id;
  probe["n"] = r.n;
  probe["k"] = r.k;
  probe["cutoff"] = v0.cutoff();
  probe["nvl"] = r.nvl;
  probe["d_score"] = r.d_score;
  probe["snl"] = r.snl;
  doc["probe"] = probe;
  doc["threshold_inputs"] = spec_json(spec);
  doc["sigma2_source"] = a.sigma2 ? "flag" : "plug-in";

  bool drift = false;
  bool failed = false;
  Json checks = Json::array();
  for (Route route : routes) {
    Json c;
    c["route"] = to_string(route);
    c["level"] = route_level(route, spec);
    const double value = route == Route::ratio ? r.snl : r.nvl;
    try {
      const AlarmResult alarm = drift_alarm(value, spec, route);
      c["value"] = alarm.value;
      c["threshold"] = alarm.threshold;
      c["margin"] = alarm.margin;
      c["verdict"] = to_string(alarm.verdict);
      drift = drift || alarm.verdict == Verdict::drift;
    } catch (const InvalidArgument& e) {
      c["error"] = e.what();
      failed = true;
    }
    checks.push_back(c);
  }
  doc["routes"] = checks;
  doc["verdict"] = failed ? "error" : (drift ? "drift" : "quiet");
  emit(doc, ctx);
  if (failed) {
    ctx.err << "zdp probe: a selected route is undefined for these dimensions\n";
    return kExitError;
  }
  return drift ? kExitDrift : kExitOk;
}

int cmd_threshold(const ThresholdArgs& a, Context& ctx) {
  ThresholdSpec spec;
  spec.n = a.n;
  spec.d = a.d;
  spec.k = a.k;
  spec.alpha = a.alpha;
  spec.sigma2 = a.sigma2;
  spec.validate();
  const auto routes = selected_routes(a.route);

  Json doc = envelope(ctx);
  doc["inputs"] = spec_json(spec);
  Json out = Json::array();
  for (Route route : routes) {
    Json c;
    c["route"] = to_string(route);
    c["level"] = route_level(route, spec);
    try {
      c["threshold"] = route_threshold(route, spec);
    } catch (const InvalidArgument& e) {
      c["threshold"] = nullptr;
      c["error"] = e.what();
    }
    out.push_back(c);
  }
  doc["thresholds"] = out;
  emit(doc, ctx);
  return kExitOk;
}

int cmd_certify(const CertifyArgs& a, Context& ctx) {
  Json doc = envelope(ctx);
  doc["kind"] = a.kind;
  bool ok = false;

  if (a.kind == "variance-leak") {
    const MatrixXd base = load(a.base, "base");
    const MatrixXd pert = load(a.perturbed, "perturbed");
    detail::require(base.rows() == pert.rows() && base.cols() == pert.cols(),
                    "dimension mismatch between --base and --perturbed");
    const ActivationMatrix h(base);
    const NullBasis v0 = null_basis(h, policy(a.cutoff));
    const auto c = variance_leak_certificate(h, pert - base, v0);
    doc["k"] = c.k;
    doc["nvl"] = c.nvl;
    doc["lambda_min"] = c.lambda_min;
    doc["lambda_max"] = c.lambda_max;
    doc["nvl_per_direction"] = c.nvl_per_direction;
    doc["result"] = to_json(c.result);
    ok = c.result.satisfied;
  } else if (a.kind == "rank-leak") {
    const LoraFactors f(load(a.a, "a"), load(a.b, "b"));
    const NullBasis v0 = null_basis(ActivationMatrix(load(a.base, "base")), policy(a.cutoff));
    const auto c = rank_leak_certificate(f, v0);
    doc["k"] = v0.k();
    doc["r"] = f.r();
    doc["leak"] = c.leak;
    doc["intermediate_bound"] = c.intermediate_bound;
    doc["outer_bound"] = c.outer_bound;
    doc["overlap_sq"] = c.overlap_sq;
    doc["cos2_sum"] = c.cos2_sum;
    doc["principal_angles"] = c.angles;
    doc["chain_ordered"] = c.chain_ordered;
    doc["degenerate"] = c.degenerate;
    doc["result"] = to_json(c.result);
    ok = c.result.satisfied;
  } else if (a.kind == "dk-residual") {
    const MatrixXd base = load(a.base, "base");
    const MatrixXd pert = load(a.perturbed, "perturbed");
    const MatrixXd est = load(a.estimate, "estimate");
    detail::require(base.rows() == pert.rows() && base.cols() == pert.cols(),
                    "dimension mismatch between --base and --perturbed");
    const NullBasis v_true = null_basis(ActivationMatrix(base), policy(a.cutoff));
    const NullBasis v_est = null_basis(ActivationMatrix(est), policy(a.cutoff));
    const auto c = dk_residual_certificate(ActivationMatrix(pert), v_true, v_est, pert - base);
    doc["k"] = v_true.k();
    doc["leak_estimated"] = c.leak_estimated;
    doc["leak_true"] = c.leak_true;
    doc["gram_norm"] = c.gram_norm;
    doc["sin_theta_sq"] = c.sin_theta_sq;
    doc["correction"] = c.correction;
    doc["one_sided_holds"] = c.one_sided_holds;
    doc["two_sided_holds"] = c.two_sided_holds;
    doc["result"] = to_json(c.result);
    ok = c.result.satisfied;
  } else if (a.kind == "trace-sandwich") {
    const Projector p = projector_from_matrix(load(a.p, "p"), "p");
    const Projector pstar = projector_from_matrix(load(a.pstar, "pstar"), "pstar");
    const auto c = projector_trace_sandwich(p, pstar, load(a.sigma, "sigma"), a.delta, a.lipschitz);
    doc["trace_p_sigma"] = c.trace_p_sigma;
    doc["trace_diff_sigma"] = c.trace_diff_sigma;
    doc["projector_distance_sq"] = c.projector_distance_sq;
    doc["lower"] = c.lower;
    doc["upper"] = c.upper;
    doc["identity_residual"] = c.identity_residual;
    doc["result"] = to_json(c.result);
    ok = c.result.satisfied;
  } else if (a.kind == "overlap") {
    const auto est = mc_overlap(a.d, a.r, a.k, a.trials, ctx.seed, a.threads);
    doc["d"] = a.d;
    doc["r"] = a.r;
    doc["k"] = a.k;
    doc["trials"] = est.trials;
    doc["mean"] = est.mean;
    doc["std_error"] = est.std_error;
    doc["expected"] = est.expected;
    doc["z"] = est.std_error > 0.0 ? (est.mean - est.expected) / est.std_error : 0.0;
    ok = est.within(3.0);
    doc["within_3_stderr"] = ok;
  } else {
    detail::fail_argument("unknown certificate kind '" + a.kind + "'");
  }
  doc["satisfied"] = ok;
  emit(doc, ctx);
  return certificate_exit(ok, ctx);
}

int cmd_track(const TrackArgs& a, Context& ctx) {
  StreamSpec spec = StreamSpec::flat(a.d, a.k, a.m, a.delta, ctx.seed);
  spec.validate();
  detail::require(a.steps >= 10, "--steps must be >= 10");
  TrackerConfig cfg;
  cfg.c = a.c ? *a.c : max_step_constant(spec.sigma_norm());
  cfg.init_seed = ctx.seed;
  if (a.init == "random") {
    cfg.init = TrackerInit::random;
  } else if (a.init == "warm") {
    cfg.init = TrackerInit::warm;
  } else {
    detail::fail_argument("--init must be random or warm");
  }
  if (a.deflation == "update") {
    cfg.deflation = Deflation::update;
  } else if (a.deflation == "literal") {
    cfg.deflation = Deflation::literal;
  } else {
    detail::fail_argument("--deflation must be update or literal");
  }
  for (double e : a.eps) detail::require(e > 0.0, "--eps values must be > 0");

  const RegretResult res = regret_harness(spec, a.steps, cfg);

  std::ofstream file;
  std::ostream* sink = &ctx.out;
  if (!ctx.out_path.empty()) {
    file.open(ctx.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw FormatError("cannot write " + ctx.out_path);
    sink = &file;
  }
  if (!a.quiet_steps) {
    for (std::size_t i = 0; i < res.scores.size(); ++i) {
      Json line;
      line["t"] = i + 1;
      line["d_t"] = res.scores[i];
      line["d_star"] = res.oracle_scores[i];
      line["gap"] = res.gaps[i];
      *sink << line.dump() << '\n';
    }
  }
  Json doc = envelope(ctx);
  doc["type"] = "summary";
  doc["steps"] = a.steps;
  doc["c"] = cfg.c;
  doc["sigma_norm"] = spec.sigma_norm();
  doc["regret"] = res.cumulative.back();
  doc["log_fit"] = Json{{"a", res.log_fit.slope}, {"b", res.log_fit.intercept}};
  doc["c_hat"] = res.c_hat;
  doc["tau2_hat"] = res.tau2_hat;
  doc["final_sin_theta"] = res.final_sin_theta;
  Json teps = Json::array();
  for (double e : a.eps) {
    teps.push_back(Json{{"eps", e}, {"t", res.c_hat > 0.0 ? Json(epsilon_accuracy_time(res.c_hat, e)) : Json(1)}});
  }
  doc["t_eps"] = teps;
  doc["step_cap_respected"] = res.step_cap_respected;
  doc["warning"] = res.warning;
  *sink << doc.dump() << '\n';
  if (!*sink) throw FormatError("write failed for track output");
  if (!res.warning.empty()) ctx.err << "zdp track: warning: " << res.warning << '\n';
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, Context& ctx) {
  Json doc = envelope(ctx);
  doc["kind"] = a.kind;
  if (a.kind == "tail") {
    ThresholdSpec spec;
    spec.n = a.n;
    spec.d = a.d;
    spec.k = a.k;
    spec.alpha = a.alpha;
    spec.sigma2 = a.sigma2;
    const TailValidation v = tail_mc_validate(spec, a.trials, ctx.seed, a.threads);
    doc["inputs"] = spec_json(spec);
    doc["trials"] = v.trials;
    Json routes = Json::array();
    for (const auto& c : v.routes) {
      Json j;
      j["route"] = to_string(c.route);
      j["available"] = c.available;
      if (c.available) {
        j["threshold"] = c.threshold;
        j["nominal"] = c.nominal;
        j["exceedances"] = c.exceedances;
        j["rate"] = c.rate;
        j["std_error"] = c.std_error;
        j["wilson_95"] = Json::array({c.interval.first, c.interval.second});
      }
      routes.push_back(j);
    }
    doc["routes"] = routes;
  } else if (a.kind == "onal") {
    detail::require(a.basis_noise >= 0.0, "--basis-noise must be >= 0");
    const RngSpec root{ctx.seed, 0};
    const RankDeficientBase base = rank_deficient_base(a.n, a.d, a.rank, root.substream(0));
    MatrixXd basis = base.null.basis();
    if (a.basis_noise > 0.0) {
      Philox gen(root.substream(1));
      basis = thin_q(basis + gen.normal_matrix(basis.rows(), basis.cols(), a.basis_noise));
    }
    Philox tgen(root.substream(2));
    const MatrixXd target = tgen.normal_matrix(a.d, a.d, 1.0);
    OnalConfig cfg;
    cfg.c = a.c;
    const auto res = run_onal_surrogate(base.h.data(), base.null, projector_from_basis(basis),
                                        target, a.r, a.steps, cfg, root.substream(3));
    doc["n"] = a.n;
    doc["d"] = a.d;
    doc["k"] = base.null.k();
    doc["r"] = a.r;
    doc["steps"] = a.steps;
    doc["basis_sin_theta"] = sin_theta_distance(basis, base.null.basis());
    doc["snl"] = res.snl;
    doc["initial_loss"] = res.initial_loss;
    doc["final_loss"] = res.final_loss;
    doc["max_containment_error"] = res.max_containment_error;
  } else if (a.kind == "fixture") {
    detail::require(!a.base.empty() && !a.perturbed.empty(),
                    "simulate fixture needs --base and --perturbed output paths");
    const RngSpec root{ctx.seed, 0};
    const RankDeficientBase base = rank_deficient_base(a.n, a.d, a.rank, root.substream(0));
    Philox gen(root.substream(1));
    const VectorXd g = gen.normal_vector(a.n) / std::sqrt(static_cast<double>(a.n));
    const MatrixXd pert = base.h.data() + a.bump * g * base.null.basis().col(0).transpose();
    write_matrix(a.base, base.h.data(), format_for_path(a.base));
    write_matrix(a.perturbed, pert, format_for_path(a.perturbed));
    doc["n"] = a.n;
    doc["d"] = a.d;
    doc["k"] = base.null.k();
    doc["bump"] = a.bump;
    doc["base"] = a.base;
    doc["perturbed"] = a.perturbed;
  } else {
    detail::fail_argument("unknown simulation '" + a.kind + "'");
  }
  emit(doc, ctx);
  return kExitOk;
}

int cmd_fisher_check(const FisherArgs& a, Context& ctx) {
  const SilentFixture fx = make_silent_fixture(a.classes, a.d, a.rank, RngSpec{ctx.seed, 0}, !a.non_silent);
  Philox gen(RngSpec{ctx.seed, 1});
  const MatrixXd v1 = orthogonal_complement(fx.null.basis());
  VectorXd dt;
  if (a.direction == "null") {
    dt = fx.null.basis() * gen.normal_vector(fx.null.k());
  } else if (a.direction == "image") {
    dt = v1 * gen.normal_vector(v1.cols());
  } else if (a.direction == "mixed") {
    dt = v1 * gen.normal_vector(v1.cols());
    dt += fx.null.basis() * gen.normal_vector(fx.null.k());
  } else {
    detail::fail_argument("--direction must be null, image or mixed");
  }
  dt.normalize();
  std::vector<double> scales = a.scales;
  if (scales.empty()) {
    for (int i = 0; i <= 8; ++i) scales.push_back(1e-3 * std::pow(10.0, i / 4.0));
  }
  for (double s : scales) detail::require(s > 0.0 && std::isfinite(s), "--scales must be positive");

  const auto rows = kl_second_order_check(fx.model, fx.h, dt, scales, fx.base);
  const SilenceCheck silence = fisher_silence_check(softmax_fim(fx.model, fx.h), fx.null, a.tol);

  Json doc = envelope(ctx);
  doc["classes"] = a.classes;
  doc["d"] = a.d;
  doc["rank"] = a.rank;
  doc["k"] = fx.null.k();
  doc["direction"] = a.direction;
  Json jr = Json::array();
  double worst = 0.0;
  for (const auto& r : rows) {
    jr.push_back(Json{{"scale", r.scale},
                      {"kl_exact", r.kl_exact},
                      {"kl_quadratic", r.kl_quadratic},
                      {"residual", r.residual}});
    worst = std::max(worst, std::abs(r.residual));
  }
  doc["rows"] = jr;
  // A log-log fit needs nonzero residuals; null directions give exact zeros.
  if (worst > 0.0 && a.direction != "null") {
    doc["residual_exponent"] = residual_exponent(rows);
  } else {
    doc["residual_exponent"] = nullptr;
  }
  doc["silence"] = Json{{"silent", silence.silent}, {"residual", silence.residual}, {"tol", a.tol}};
  emit(doc, ctx);
  if (a.require_silence && !silence.silent) {
    ctx.err << "zdp fisher-check: Fisher matrix is not silent on the null space (residual "
            << silence.residual << ")\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace zdp::cli
