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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include "zdp/certificates.hpp"
#include "zdp/cli/cli.hpp"
#include "zdp/error.hpp"
#include "zdp/matrix_io.hpp"
#include "zdp/nullspace.hpp"
#include "zdp/random.hpp"
#include "zdp/synth.hpp"

namespace zdp {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using nlohmann::json;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

CliResult zdp_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("zdp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const MatrixXd& m) const {
    write_matrix(path(name), m, format_for_path(path(name)));
    return path(name);
  }
  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  fs::path dir_;
};

TEST(CliConfig, ParsesKeyValueLines) {
  const auto kv = cli::parse_config("# comment\n alpha = 0.01\n\n--route=lm\r\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "alpha");
  EXPECT_EQ(kv[0].second, "0.01");
  EXPECT_EQ(kv[1].first, "route");
  EXPECT_EQ(kv[1].second, "lm");
  EXPECT_THROW(cli::parse_config("alpha 0.01\n"), FormatError);
}

TEST(CliThreshold, RatioExample) {
  const auto r = zdp_run({"threshold", "--n", "200", "--d", "64", "--k", "8", "--alpha", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = r.doc();
  EXPECT_EQ(doc["command"], "threshold");
  EXPECT_TRUE(doc.contains("version"));
  EXPECT_TRUE(doc.contains("seed"));
  for (const auto& t : doc["thresholds"]) {
    if (t["route"] == "ratio") EXPECT_NEAR(t["threshold"].get<double>(), 0.14058722215222366, 1e-12);
  }
  EXPECT_EQ(doc["config"]["n"], "200");
}

TEST(CliThreshold, AlphaOutOfRangeFails) {
  const auto r = zdp_run({"threshold", "--alpha", "0.6"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliThreshold, Sigma2ScalesLm) {
  auto lm = [](const CliResult& r) {
    for (const auto& t : r.doc()["thresholds"]) {
      if (t["route"] == "lm") return t["threshold"].get<double>();
    }
    return 0.0;
  };
  const auto one = zdp_run({"threshold", "--sigma2", "1"});
  const auto two = zdp_run({"threshold", "--sigma2", "2"});
  EXPECT_NEAR(lm(two), 2.0 * lm(one), 1e-12);
}

TEST(CliThreshold, UndefinedRatioReportedPerRoute) {
  const auto r = zdp_run({"threshold", "--n", "10", "--d", "1", "--k", "1", "--alpha", "1e-30"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& t : r.doc()["thresholds"]) {
    if (t["route"] == "ratio") {
      EXPECT_TRUE(t["threshold"].is_null());
      EXPECT_TRUE(t.contains("error"));
    } else {
      EXPECT_TRUE(t["threshold"].is_number());
    }
  }
}

TEST_F(CliTest, ProbeIdenticalFilesAreQuiet) {
  const auto base = rank_deficient_base(64, 16, 10, RngSpec{1, 0});
  const auto b = write("base.zdp", base.h.data());
  const auto r = zdp_run({"probe", "--base", b, "--perturbed", b});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = r.doc();
  EXPECT_LE(doc["probe"]["snl"].get<double>(), 1e-20);
  EXPECT_EQ(doc["probe"]["k"], 6);
  EXPECT_EQ(doc["verdict"], "quiet");
}

TEST_F(CliTest, ProbeNullBumpDrifts) {
  const auto fx = zdp_run({"simulate", "fixture", "--n", "64", "--d", "16", "--rank", "10", "--bump",
                           "500", "--seed", "3", "--base", path("b.csv"), "--perturbed", path("p.zdp")});
  ASSERT_EQ(fx.code, 0) << fx.err;
  const auto r = zdp_run({"probe", "--base", path("b.csv"), "--perturbed", path("p.zdp"), "--route", "all"});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_EQ(r.doc()["verdict"], "drift");
}

TEST_F(CliTest, ProbeMalformedHeaderNamesOffset) {
  const auto b = write("base.zdp", MatrixXd::Identity(4, 4));
  const auto bad = write_text("bad.zdp", std::string("ZDP1") + std::string(10, '\0'));
  const auto r = zdp_run({"probe", "--base", b, "--perturbed", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("byte offset"), std::string::npos) << r.err;
}

TEST_F(CliTest, ProbeDimensionMismatchAndTrivialNull) {
  const auto a = write("a.csv", MatrixXd::Identity(4, 4));
  const auto b = write("b.csv", MatrixXd::Identity(5, 5));
  EXPECT_EQ(zdp_run({"probe", "--base", a, "--perturbed", b}).code, 1);
  const auto r = zdp_run({"probe", "--base", a, "--perturbed", a});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("k = 0"), std::string::npos);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const auto cfg = write_text("run.cfg", "n = 200\nd = 64\nk = 8\nalpha = 0.01\n");
  const auto r = zdp_run({"threshold", "--config", cfg, "--alpha", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = r.doc();
  EXPECT_EQ(doc["config"]["alpha"], "0.05");
  EXPECT_EQ(doc["config"]["n"], "200");
  EXPECT_EQ(doc["inputs"]["k"], 8);
  const auto bad = write_text("bad.cfg", "bogus = 1\n");
  EXPECT_EQ(zdp_run({"threshold", "--config", bad}).code, 1);
}

TEST(CliSeed, EnvironmentSuppliesDefault) {
  ::setenv("ZDP_SEED", "41", 1);
  const auto env = zdp_run({"certify", "overlap", "--trials", "200"});
  const auto flag = zdp_run({"certify", "overlap", "--trials", "200", "--seed", "7"});
  ::unsetenv("ZDP_SEED");
  EXPECT_EQ(env.doc()["seed"], 41);
  EXPECT_EQ(flag.doc()["seed"], 7);
}

TEST_F(CliTest, CertifyVarianceLeakZeroPerturbation) {
  const auto base = rank_deficient_base(40, 12, 7, RngSpec{2, 0});
  const auto b = write("b.zdp", base.h.data());
  const auto r = zdp_run({"certify", "variance-leak", "--base", b, "--perturbed", b});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.doc()["satisfied"].get<bool>());
}

TEST_F(CliTest, CertifyRankLeakOrthogonal) {
  const auto base = rank_deficient_base(40, 12, 7, RngSpec{3, 0});
  const MatrixXd v1 = orthogonal_complement(base.null.basis());
  Philox gen(RngSpec{3, 1});
  const MatrixXd a = gen.normal_matrix(12, 2, 1.0);
  const MatrixXd bm = v1 * gen.normal_matrix(v1.cols(), 2, 1.0);
  const auto r = zdp_run({"certify", "rank-leak", "--base", write("h.zdp", base.h.data()), "--a",
                          write("a.zdp", a), "--b", write("b.zdp", bm)});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(r.doc()["leak"].get<double>(), 1e-12);
}

TEST(CliCertify, OverlapMatchesExpectation) {
  const auto r = zdp_run({"certify", "overlap", "--d", "12", "--r", "2", "--k", "3", "--trials",
                          "20000", "--seed", "5", "--threads", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = r.doc();
  EXPECT_EQ(doc["expected"], 0.5);
  EXPECT_TRUE(doc["within_3_stderr"].get<bool>());
}

TEST_F(CliTest, TrackWarmStartHasZeroGaps) {
  const auto r = zdp_run({"track", "--steps", "50", "--init", "warm", "--d", "8", "--k", "2",
                          "--m", "4", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int steps = 0;
  json summary;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    if (j.contains("gap")) {
      ++steps;
      EXPECT_LE(std::abs(j["gap"].get<double>()), 1e-20);
    } else {
      summary = j;
    }
  }
  EXPECT_EQ(steps, 50);
  EXPECT_EQ(summary["type"], "summary");
  EXPECT_EQ(summary["seed"], 1);
}

TEST_F(CliTest, TrackIsByteDeterministic) {
  const std::vector<std::string> args{"track", "--steps", "200", "--seed", "9", "--out", path("a.jsonl")};
  ASSERT_EQ(zdp_run(args).code, 0);
  auto args2 = args;
  args2.back() = path("b.jsonl");
  ASSERT_EQ(zdp_run(args2).code, 0);
  std::ifstream fa(path("a.jsonl")), fb(path("b.jsonl"));
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_FALSE(sa.str().empty());
  EXPECT_EQ(sa.str(), sb.str());
}

TEST_F(CliTest, TrackStepCapWarning) {
  const auto r = zdp_run({"track", "--steps", "20", "--c", "100", "--summary-only"});
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  EXPECT_FALSE(doc["step_cap_respected"].get<bool>());
  EXPECT_FALSE(doc["warning"].get<std::string>().empty());
}

TEST(CliFisher, NullDirectionIsSilent) {
  const auto r = zdp_run({"fisher-check", "--direction", "null", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : r.doc()["rows"]) EXPECT_LE(row["kl_exact"].get<double>(), 1e-15);
}

TEST(CliFisher, ImageDirectionExponent) {
  const auto r = zdp_run({"fisher-check", "--direction", "image", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(r.doc()["residual_exponent"].get<double>(), 2.9);
}

TEST(CliFisher, NonSilentWithRequireSilenceFails) {
  EXPECT_EQ(zdp_run({"fisher-check", "--non-silent", "--require-silence"}).code, 1);
  EXPECT_EQ(zdp_run({"fisher-check", "--require-silence"}).code, 0);
}

TEST_F(CliTest, ReportAggregatesTracks) {
  for (int s = 1; s <= 3; ++s) {
    ASSERT_EQ(zdp_run({"track", "--steps", "40", "--seed", std::to_string(s), "--out",
                       path("t" + std::to_string(s) + ".jsonl")})
                  .code,
              0);
  }
  const auto r = zdp_run({"report", path("t1.jsonl"), path("t2.jsonl"), path("t3.jsonl"), "--svg",
                          path("gap.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = r.doc();
  EXPECT_EQ(doc["aggregate"]["mean_gap"].size(), 40u);
  EXPECT_EQ(doc["seeds"], json::array({1, 2, 3}));
  EXPECT_TRUE(fs::exists(path("gap.svg")));
}

TEST_F(CliTest, ReportSinglePassThroughAndErrors) {
  const auto t = zdp_run({"threshold", "--out", path("t.json")});
  ASSERT_EQ(t.code, 0);
  const auto one = zdp_run({"report", path("t.json")});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(one.doc()["summary"]["command"], "threshold");

  EXPECT_EQ(zdp_run({"report"}).code, 1);
  ASSERT_EQ(zdp_run({"fisher-check", "--out", path("f.json")}).code, 0);
  EXPECT_EQ(zdp_run({"report", path("t.json"), path("f.json")}).code, 1);
}

TEST(CliParse, UnknownCommandFails) {
  EXPECT_EQ(zdp_run({"frobnicate"}).code, 1);
  EXPECT_EQ(zdp_run({}).code, 1);
  EXPECT_EQ(zdp_run({"--help"}).code, 0);
}

}  // namespace
}  // namespace zdp
