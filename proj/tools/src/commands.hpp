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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace zdp::cli {

using Json = nlohmann::ordered_json;

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::string out_path;  ///< empty writes to `out`
};

struct ProbeArgs {
  std::string base;
  std::string perturbed;
  std::optional<double> cutoff;
  double alpha = 0.05;
  std::optional<double> sigma2;
  std::string route = "ratio";
  std::string layer;
};

struct ThresholdArgs {
  long n = 100;
  long d = 50;
  long k = 4;
  double alpha = 0.05;
  double sigma2 = 1.0;
  std::string route = "all";
};

struct CertifyArgs {
  std::string kind;
  std::string base;
  std::string perturbed;
  std::string estimate;
  std::string a;
  std::string b;
  std::string p;
  std::string pstar;
  std::string sigma;
  std::optional<double> cutoff;
  double delta = 0.0;
  double lipschitz = 0.0;
  long d = 12;
  long r = 2;
  long k = 3;
  long trials = 20000;
  unsigned threads = 0;
};

struct TrackArgs {
  long d = 32;
  long k = 4;
  long m = 16;
  double delta = 0.5;
  long steps = 1000;
  std::optional<double> c;
  std::string init = "random";
  std::string deflation = "update";
  std::vector<double> eps{1e-2, 1e-3};
  bool quiet_steps = false;
};

struct SimulateArgs {
  std::string kind;  ///< tail, onal or fixture
  long n = 100;
  long d = 50;
  long k = 4;
  double alpha = 0.05;
  double sigma2 = 1.0;
  long trials = 100000;
  unsigned threads = 0;
  long rank = 10;
  long r = 2;
  long steps = 1000;
  double c = 0.1;
  double basis_noise = 0.0;
  std::string base;
  std::string perturbed;
  double bump = 0.0;
};

struct FisherArgs {
  long classes = 8;
  long d = 16;
  long rank = 10;
  std::string direction = "image";
  std::vector<double> scales;
  bool non_silent = false;
  bool require_silence = false;
  double tol = 1e-10;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string svg;
};

int cmd_probe(const ProbeArgs& a, Context& ctx);
int cmd_threshold(const ThresholdArgs& a, Context& ctx);
int cmd_certify(const CertifyArgs& a, Context& ctx);
int cmd_track(const TrackArgs& a, Context& ctx);
int cmd_simulate(const SimulateArgs& a, Context& ctx);
int cmd_fisher_check(const FisherArgs& a, Context& ctx);
int cmd_report(const ReportArgs& a, Context& ctx);

// json_util.cpp
Json envelope(const Context& ctx);
/// Writes one pretty-printed document to --out or the output stream.
void emit(const Json& doc, Context& ctx);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace zdp::cli
