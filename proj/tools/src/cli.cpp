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
#include "zdp/cli/cli.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <sstream>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "commands.hpp"
#include "zdp/error.hpp"
#include "zdp/version.hpp"

namespace zdp::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Options that select where things go rather than what is computed.
bool echo_excluded(const std::string& name) {
  return name == "help" || name == "config" || name == "out" || name == "svg";
}

Json echo_config(const CLI::App& sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    const std::string name = names.empty() ? opt->get_name() : names.front();
    if (name.empty() || echo_excluded(name)) continue;
    if (opt->get_expected_max() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->reduced_results()) joined += (joined.empty() ? "" : ",") + r;
      cfg[name] = joined;
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    } else {
      cfg[name] = nullptr;
    }
  }
  return cfg;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) {
      detail::fail_argument(std::string("--") + flag + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::size_t command_depth(const std::vector<std::string>& args) {
  if (args.empty()) return 0;
  if ((args[0] == "certify" || args[0] == "simulate") && args.size() > 1 &&
      args[1].rfind("-", 0) != 0) {
    return 2;
  }
  return 1;
}

std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

// Config entries are spliced in ahead of the user's flags; with TakeLast the
// command line then wins.
std::vector<std::string> with_config(const std::vector<std::string>& args) {
  const std::string path = find_config(args);
  if (path.empty()) return args;
  const auto entries = parse_config(read_text(path));
  const std::size_t depth = command_depth(args);
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(depth));
  for (const auto& [k, v] : entries) {
    if (k == "config") continue;
    out.push_back("--" + k + "=" + v);
  }
  out.insert(out.end(), args.begin() + static_cast<long>(depth), args.end());
  return out;
}

void add_common(CLI::App* sub, Context& ctx, std::string& config_path, bool with_seed) {
  sub->add_option("--config", config_path, "key=value file; flags override its entries")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", ctx.out_path, "write the report here instead of stdout");
  if (with_seed) {
    sub->add_option("--seed", ctx.seed, "RNG seed")->envname("ZDP_SEED");
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, {}, Json::object(), 0, {}};
  std::string config_path;

  CLI::App app{"Null-space drift probes, thresholds and certificates", "zdp"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  ProbeArgs probe;
  auto* p = app.add_subcommand("probe", "probe a perturbed activation matrix against a base");
  p->add_option("--base", probe.base, "base activations (csv or .zdp)")->required();
  p->add_option("--perturbed", probe.perturbed, "perturbed activations")->required();
  p->add_option("--cutoff", probe.cutoff, "absolute singular-value cutoff (default: relative)");
  p->add_option("--alpha", probe.alpha, "false-alarm level");
  p->add_option("--sigma2", probe.sigma2, "noise variance (default: plug-in estimate)");
  p->add_option("--route", probe.route, "lm, mp_edge, ratio or all");
  p->add_option("--layer", probe.layer, "layer label");
  add_common(p, ctx, config_path, false);

  ThresholdArgs thr;
  auto* t = app.add_subcommand("threshold", "print drift thresholds");
  t->add_option("--n", thr.n, "tokens");
  t->add_option("--d", thr.d, "width");
  t->add_option("--k", thr.k, "null-space dimension");
  t->add_option("--alpha", thr.alpha, "false-alarm level");
  t->add_option("--sigma2", thr.sigma2, "noise variance");
  t->add_option("--route", thr.route, "lm, mp_edge, ratio or all");
  add_common(t, ctx, config_path, false);

  CertifyArgs cert;
  auto* c = app.add_subcommand("certify", "check a bound on concrete inputs");
  c->require_subcommand(1);
  const char* kinds[] = {"variance-leak", "rank-leak", "dk-residual", "trace-sandwich", "overlap"};
  for (const char* kind : kinds) {
    auto* k = c->add_subcommand(kind);
    const std::string kk = kind;
    if (kk == "variance-leak" || kk == "rank-leak" || kk == "dk-residual") {
      k->add_option("--base", cert.base, "base activations")->required();
      k->add_option("--cutoff", cert.cutoff, "absolute singular-value cutoff");
    }
    if (kk == "variance-leak" || kk == "dk-residual") {
      k->add_option("--perturbed", cert.perturbed, "perturbed activations")->required();
    }
    if (kk == "dk-residual") {
      k->add_option("--estimate", cert.estimate, "matrix whose null space is the estimate")->required();
    }
    if (kk == "rank-leak") {
      k->add_option("--a", cert.a, "factor A (d x r)")->required();
      k->add_option("--b", cert.b, "factor B (d x r)")->required();
    }
    if (kk == "trace-sandwich") {
      k->add_option("--p", cert.p, "projector P")->required();
      k->add_option("--pstar", cert.pstar, "projector P*")->required();
      k->add_option("--sigma", cert.sigma, "covariance Sigma")->required();
      k->add_option("--delta", cert.delta, "smallest nonzero eigenvalue bound")->required();
      k->add_option("--lipschitz", cert.lipschitz, "largest eigenvalue bound")->required();
    }
    if (kk == "overlap") {
      k->add_option("--d", cert.d, "ambient dimension");
      k->add_option("--r", cert.r, "first subspace dimension");
      k->add_option("--k", cert.k, "second subspace dimension");
      k->add_option("--trials", cert.trials, "Monte Carlo trials");
      k->add_option("--threads", cert.threads, "worker threads (0 = all cores)");
    }
    add_common(k, ctx, config_path, kk == "overlap");
  }

  TrackArgs track;
  std::string track_eps = "0.01,0.001";
  auto* tr = app.add_subcommand("track", "run the online null-space tracker on a synthetic stream");
  tr->add_option("--d", track.d, "width");
  tr->add_option("--k", track.k, "null-space dimension");
  tr->add_option("--m", track.m, "rows per batch");
  tr->add_option("--delta", track.delta, "eigengap");
  tr->add_option("--steps", track.steps, "number of steps T");
  tr->add_option("--c", track.c, "step constant (default: the largest allowed)");
  tr->add_option("--init", track.init, "random or warm");
  tr->add_option("--deflation", track.deflation, "update or literal");
  tr->add_option("--eps", track_eps, "comma-separated accuracy targets");
  tr->add_flag("--summary-only", track.quiet_steps, "omit per-step lines");
  add_common(tr, ctx, config_path, true);

  SimulateArgs sim_tail, sim_onal, sim_fixture;
  sim_tail.kind = "tail";
  sim_onal.kind = "onal";
  sim_onal.n = 64;
  sim_onal.d = 16;
  sim_fixture.kind = "fixture";
  sim_fixture.n = 64;
  sim_fixture.d = 16;
  auto* s = app.add_subcommand("simulate", "Monte Carlo and synthetic-data experiments");
  s->require_subcommand(1);
  auto* st = s->add_subcommand("tail", "false-alarm rates of the thresholds under Gaussian noise");
  st->add_option("--n", sim_tail.n, "tokens");
  st->add_option("--d", sim_tail.d, "width");
  st->add_option("--k", sim_tail.k, "null-space dimension");
  st->add_option("--alpha", sim_tail.alpha, "false-alarm level");
  st->add_option("--sigma2", sim_tail.sigma2, "noise variance");
  st->add_option("--trials", sim_tail.trials, "Monte Carlo trials");
  st->add_option("--threads", sim_tail.threads, "worker threads (0 = all cores)");
  add_common(st, ctx, config_path, true);
  auto* so = s->add_subcommand("onal", "null-aligned low-rank training on a synthetic layer");
  so->add_option("--n", sim_onal.n, "tokens");
  so->add_option("--d", sim_onal.d, "width");
  so->add_option("--rank", sim_onal.rank, "rank of the base activations");
  so->add_option("--r", sim_onal.r, "adapter rank");
  so->add_option("--steps", sim_onal.steps, "training steps");
  so->add_option("--c", sim_onal.c, "step constant");
  so->add_option("--basis-noise", sim_onal.basis_noise, "perturbation of the projector basis");
  add_common(so, ctx, config_path, true);
  auto* sf = s->add_subcommand("fixture", "write a rank-deficient base and a null-direction bump");
  sf->add_option("--n", sim_fixture.n, "tokens");
  sf->add_option("--d", sim_fixture.d, "width");
  sf->add_option("--rank", sim_fixture.rank, "rank of the base");
  sf->add_option("--bump", sim_fixture.bump, "bump amplitude along the first null direction");
  sf->add_option("--base", sim_fixture.base, "output path for the base")->required();
  sf->add_option("--perturbed", sim_fixture.perturbed, "output path for the perturbed matrix")->required();
  add_common(sf, ctx, config_path, true);

  FisherArgs fish;
  std::string fish_scales;
  auto* f = app.add_subcommand("fisher-check", "KL against its Fisher quadratic on a softmax fixture");
  f->add_option("--classes", fish.classes, "softmax classes");
  f->add_option("--d", fish.d, "width");
  f->add_option("--rank", fish.rank, "rank of the base activations");
  f->add_option("--direction", fish.direction, "null, image or mixed");
  f->add_option("--scales", fish_scales, "comma-separated perturbation scales");
  f->add_option("--tol", fish.tol, "relative tolerance of the silence check");
  f->add_flag("--non-silent", fish.non_silent, "build a head that reads a null direction");
  f->add_flag("--require-silence", fish.require_silence, "exit 1 unless the head is silent");
  add_common(f, ctx, config_path, true);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "aggregate earlier outputs");
  r->add_option("inputs", rep.inputs, "JSON or JSON-lines files")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  r->add_option("--svg", rep.svg, "optional plot output");
  add_common(r, ctx, config_path, false);

  try {
    std::vector<std::string> argv = with_config(args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    err << "zdp: " << e.what() << '\n';
    return kExitError;
  }

  const CLI::App* leaf = app.get_subcommands().front();
  ctx.command = leaf->get_name();
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
  ctx.config = echo_config(*leaf);

  try {
    if (ctx.command == "probe") return cmd_probe(probe, ctx);
    if (ctx.command == "threshold") return cmd_threshold(thr, ctx);
    if (ctx.command == "certify") {
      cert.kind = leaf->get_name();
      return cmd_certify(cert, ctx);
    }
    if (ctx.command == "track") {
      track.eps = parse_list(track_eps, "eps");
      return cmd_track(track, ctx);
    }
    if (ctx.command == "simulate") {
      if (leaf->get_name() == "tail") return cmd_simulate(sim_tail, ctx);
      if (leaf->get_name() == "onal") return cmd_simulate(sim_onal, ctx);
      return cmd_simulate(sim_fixture, ctx);
    }
    if (ctx.command == "fisher-check") {
      fish.scales = parse_list(fish_scales, "scales");
      return cmd_fisher_check(fish, ctx);
    }
    if (ctx.command == "report") return cmd_report(rep, ctx);
  } catch (const std::exception& e) {
    err << "zdp " << ctx.command << ": " << e.what() << '\n';
    return kExitError;
  }
  err << "zdp: unknown command\n";
  return kExitError;
}

}  // namespace zdp::cli
