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
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "zdp/cli/cli.hpp"
#include "zdp/error.hpp"
#include "zdp/online.hpp"
#include "zdp/stats.hpp"

namespace zdp::cli {

namespace {

struct Input {
  std::string path;
  Json summary;
  std::vector<double> gaps;  ///< track streams only
};

std::string command_of(const Json& j) {
  if (!j.is_object() || !j.contains("command") || !j["command"].is_string()) return {};
  std::string c = j["command"].get<std::string>();
  if (j.contains("kind") && j["kind"].is_string()) c += " " + j["kind"].get<std::string>();
  return c;
}

Input load_input(const std::string& path) {
  const std::string text = read_text(path);
  Input in;
  in.path = path;
  Json doc = Json::parse(text, nullptr, false);
  if (!doc.is_discarded()) {
    in.summary = std::move(doc);
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw FormatError(path + ": line " + std::to_string(lineno) + " is not valid JSON");
      }
      if (j.contains("type") && j["type"] == "summary") {
        in.summary = std::move(j);
      } else if (j.contains("gap")) {
        in.gaps.push_back(j["gap"].get<double>());
      }
    }
  }
  if (command_of(in.summary).empty()) {
    throw FormatError(path + ": not a zdp report (no command field)");
  }
  return in;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

constexpr double kW = 640.0, kH = 400.0, kPad = 50.0;

std::string svg_open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n<rect width=\"640\" height=\"400\" fill=\"white\"/>\n"
         "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + title + "</text>\n";
}

std::string regret_svg(const std::vector<double>& mean, const std::vector<double>& se) {
  // log-log axes; non-positive values are floored to keep the curve drawable.
  const double floor_v = 1e-12;
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    lo = std::min(lo, std::log10(std::max(mean[i] - se[i], floor_v)));
    hi = std::max(hi, std::log10(std::max(mean[i] + se[i], floor_v)));
  }
  if (hi <= lo) hi = lo + 1.0;
  const double tmax = std::log10(static_cast<double>(mean.size()));
  auto px = [&](std::size_t i) {
    const double lt = std::log10(static_cast<double>(i + 1));
    return kPad + (kW - 2 * kPad) * (tmax > 0 ? lt / tmax : 0.0);
  };
  auto py = [&](double v) {
    const double lv = std::log10(std::max(v, floor_v));
    return kH - kPad - (kH - 2 * kPad) * (lv - lo) / (hi - lo);
  };
  std::string s = svg_open("mean gap vs t (log-log)");
  s += "<polygon fill=\"#9ecae1\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < mean.size(); ++i) s += fmt(px(i)) + "," + fmt(py(mean[i] + se[i])) + " ";
  for (std::size_t i = mean.size(); i-- > 0;) s += fmt(px(i)) + "," + fmt(py(mean[i] - se[i])) + " ";
  s += "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < mean.size(); ++i) s += fmt(px(i)) + "," + fmt(py(mean[i])) + " ";
  s += "\"/>\n<text x=\"" + fmt(kW / 2) + "\" y=\"" + fmt(kH - 12) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t = 1 .. " +
       std::to_string(mean.size()) + "</text>\n</svg>\n";
  return s;
}

std::string coverage_svg(const Json& routes) {
  std::string s = svg_open("tail coverage: observed rate vs nominal");
  const double bar = 60.0;
  double top = 0.0;
  for (const auto& r : routes) {
    if (!r.value("available", false)) continue;
    top = std::max({top, r["rate"].get<double>(), r["nominal"].get<double>()});
  }
  if (top <= 0.0) top = 1.0;
  std::size_t i = 0;
  for (const auto& r : routes) {
    const double x = kPad + 40.0 + static_cast<double>(i) * 180.0;
    ++i;
    s += "<text x=\"" + fmt(x + bar) + "\" y=\"" + fmt(kH - kPad + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         r["route"].get<std::string>() + "</text>\n";
    if (!r.value("available", false)) continue;
    const double scale = (kH - 2 * kPad) / (top * 1.1);
    const double hr = r["rate"].get<double>() * scale;
    const double hn = r["nominal"].get<double>() * scale;
    s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(kH - kPad - hr) + "\" width=\"" + fmt(bar) +
         "\" height=\"" + fmt(hr) + "\" fill=\"#3182bd\"/>\n";
    s += "<rect x=\"" + fmt(x + bar) + "\" y=\"" + fmt(kH - kPad - hn) + "\" width=\"" + fmt(bar) +
         "\" height=\"" + fmt(hn) + "\" fill=\"#bdbdbd\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

Json aggregate_track(const std::vector<Input>& inputs, std::vector<double>& mean,
                     std::vector<double>& se) {
  const std::size_t T = inputs.front().gaps.size();
  for (const auto& in : inputs) {
    if (in.gaps.empty()) throw FormatError(in.path + ": track output has no step lines");
    if (in.gaps.size() != T) throw FormatError("track inputs have different step counts");
  }
  mean.assign(T, 0.0);
  se.assign(T, 0.0);
  std::vector<double> column(inputs.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < inputs.size(); ++s) column[s] = inputs[s].gaps[t];
    const auto ms = stats::mean_stderr(column);
    mean[t] = ms.mean;
    se[t] = ms.std_error;
  }
  std::vector<double> cumulative(T);
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) cumulative[t] = acc += mean[t];

  Json agg;
  agg["steps"] = T;
  agg["mean_regret"] = cumulative.back();
  if (T >= 10) {
    const auto fit = fit_log_regret(cumulative);
    agg["log_fit"] = Json{{"a", fit.slope}, {"b", fit.intercept}};
    agg["c_hat"] = fit_inverse_t(mean);
  }
  agg["mean_gap"] = mean;
  agg["stderr_gap"] = se;
  return agg;
}

Json aggregate_tail(const std::vector<Input>& inputs) {
  const Json& first = inputs.front().summary;
  for (const auto& in : inputs) {
    if (in.summary["inputs"] != first["inputs"]) {
      throw FormatError(in.path + ": tail inputs differ from " + inputs.front().path);
    }
  }
  Json routes = Json::array();
  for (std::size_t r = 0; r < first["routes"].size(); ++r) {
    Json j;
    j["route"] = first["routes"][r]["route"];
    j["available"] = first["routes"][r]["available"];
    if (!j["available"].get<bool>()) {
      routes.push_back(j);
      continue;
    }
    long hits = 0, trials = 0;
    for (const auto& in : inputs) {
      hits += in.summary["routes"][r]["exceedances"].get<long>();
      trials += in.summary["trials"].get<long>();
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(trials);
    const auto ci = stats::wilson_interval(hits, trials);
    j["nominal"] = first["routes"][r]["nominal"];
    j["exceedances"] = hits;
    j["trials"] = trials;
    j["rate"] = rate;
    j["std_error"] = stats::binomial_stderr(rate, trials);
    j["wilson_95"] = Json::array({ci.first, ci.second});
    routes.push_back(j);
  }
  return Json{{"inputs", first["inputs"]}, {"routes", routes}};
}

}  // namespace

int cmd_report(const ReportArgs& a, Context& ctx) {
  detail::require(!a.inputs.empty(), "report needs at least one input file");
  std::vector<Input> inputs;
  for (const auto& p : a.inputs) inputs.push_back(load_input(p));
  const std::string schema = command_of(inputs.front().summary);
  for (const auto& in : inputs) {
    const std::string c = command_of(in.summary);
    if (c != schema) {
      detail::fail_argument("incompatible inputs: '" + schema + "' and '" + c + "' (" + in.path + ")");
    }
  }

  Json doc = envelope(ctx);
  doc["seed"] = nullptr;
  Json seeds = Json::array();
  Json paths = Json::array();
  for (const auto& in : inputs) {
    seeds.push_back(in.summary.contains("seed") ? in.summary["seed"] : Json(nullptr));
    paths.push_back(in.path);
  }
  doc["schema"] = schema;
  doc["inputs"] = paths;
  doc["seeds"] = seeds;

  std::string svg;
  if (schema == "track" && !inputs.front().gaps.empty()) {
    std::vector<double> mean, se;
    doc["aggregate"] = aggregate_track(inputs, mean, se);
    svg = regret_svg(mean, se);
  } else if (schema == "simulate tail") {
    doc["aggregate"] = aggregate_tail(inputs);
    svg = coverage_svg(doc["aggregate"]["routes"]);
  }
  if (inputs.size() == 1) {
    doc["summary"] = inputs.front().summary;
  } else {
    Json all = Json::array();
    for (const auto& in : inputs) all.push_back(in.summary);
    doc["summaries"] = all;
  }
  if (!a.svg.empty()) {
    if (svg.empty()) {
      ctx.err << "zdp report: no plot defined for '" << schema << "'; skipping " << a.svg << '\n';
    } else {
      write_text(a.svg, svg);
    }
  }
  emit(doc, ctx);
  return kExitOk;
}

}  // namespace zdp::cli
