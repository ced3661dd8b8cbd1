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
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "zdp/error.hpp"
#include "zdp/version.hpp"

namespace zdp::cli {

Json envelope(const Context& ctx) {
  Json j;
  j["tool"] = "zdp";
  j["version"] = kVersion;
  j["command"] = ctx.command;
  j["seed"] = ctx.seed;
  j["config"] = ctx.config;
  return j;
}

void emit(const Json& doc, Context& ctx) {
  const std::string text = doc.dump(2) + "\n";
  if (ctx.out_path.empty()) {
    ctx.out << text;
  } else {
    write_text(ctx.out_path, text);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path);
  f << text;
  if (!f) throw FormatError("write failed for " + path);
}

}  // namespace zdp::cli
