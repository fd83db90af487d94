// Copyright 2026 The sandbox-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace sandbox_dp::cli {
namespace {

namespace fs = std::filesystem;

const std::string kSourceDir = SANDBOX_DP_SOURCE_DIR;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return CliRun{code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path FreshDir(const std::string& name) {
  fs::path dir = fs::path(testing::TempDir()) / ("sandbox_dp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Scenario(const std::string& name) {
  return kSourceDir + "/scenarios/" + name;
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kUsage);
  EXPECT_EQ(Cli({"simulate"}).code, kUsage);
  EXPECT_EQ(Cli({"simulate", Scenario("ara_shoe_purchase.json"), "--disable-noise"})
                .code,
            kUsage);
  EXPECT_EQ(Cli({"--help"}).code, kOk);
}

TEST(CliTest, SchemaErrorWritesNothing) {
  const fs::path dir = FreshDir("schema");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"format": "sandbox-dp-scenario/1", "api": "nope"})";
  CliRun r = Cli({"simulate", bad.string(), "--ledger", (dir / "l.json").string(),
               "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, kSchemaError);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_FALSE(fs::exists(dir / "l.json"));
  EXPECT_EQ(Cli({"simulate", (dir / "missing.json").string()}).code, kIoError);
}

TEST(CliTest, SimulateIsReproducible) {
  const fs::path a = FreshDir("repro_a");
  const fs::path b = FreshDir("repro_b");
  for (const fs::path& d : {a, b}) {
    CliRun r = Cli({"simulate", Scenario("paa_first_sighting.json"), "--seed", "17",
                 "--ledger", (d / "ledger.json").string(), "--out",
                 (d / "out").string()});
    ASSERT_EQ(r.code, kOk) << r.err;
  }
  for (const char* f :
       {"transcript.jsonl", "reports.jsonl", "summaries.jsonl", "trace.jsonl"}) {
    EXPECT_EQ(Slurp(a / "out" / f), Slurp(b / "out" / f)) << f;
    EXPECT_FALSE(Slurp(a / "out" / f).empty()) << f;
  }
  EXPECT_EQ(Slurp(a / "ledger.json"), Slurp(b / "ledger.json"));
}

TEST(CliTest, AraReportCarriesValue) {
  const fs::path d = FreshDir("ara");
  CliRun r = Cli({"simulate", Scenario("ara_shoe_purchase.json"), "--ledger",
               (d / "ledger.json").string(), "--out", d.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  const std::string reports = Slurp(d / "reports.jsonl");
  EXPECT_NE(reports.find("\"key\":\"000000000000000a000000000000005f\""),
            std::string::npos);
  EXPECT_NE(reports.find("\"value\":70"), std::string::npos);

  CliRun report = Cli({"budget-report", (d / "ledger.json").string()});
  EXPECT_EQ(report.code, kOk);
  EXPECT_NE(report.out.find("charged reports: 1"), std::string::npos)
      << report.out;
  EXPECT_NE(report.out.find("63"), std::string::npos);
}

TEST(CliTest, RepeatedRunsAbortWhenBudgetRunsOut) {
  const fs::path d = FreshDir("abort");
  const fs::path sc = d / "tight.json";
  std::string text = Slurp(Scenario("ara_shoe_purchase.json"));
  text.replace(text.find("\"eps_star\": \"64\""), 16, "\"eps_star\": \"1\"");
  std::ofstream(sc) << text;
  const std::string ledger = (d / "ledger.json").string();
  EXPECT_EQ(Cli({"simulate", sc.string(), "--ledger", ledger, "--out",
                 (d / "1").string()})
                .code,
            kOk);
  EXPECT_EQ(Cli({"simulate", sc.string(), "--ledger", ledger, "--out",
                 (d / "2").string()})
                .code,
            kRequestAborted);
  // Same ledger, different caps.
  EXPECT_EQ(Cli({"simulate", Scenario("ara_shoe_purchase.json"), "--ledger",
                 ledger, "--out", (d / "3").string()})
                .code,
            kLedgerConflict);
}

TEST(CliTest, LedgerDirFromEnvironment) {
  const fs::path d = FreshDir("env");
  ::setenv(kLedgerDirEnv, d.string().c_str(), 1);
  CliRun r = Cli({"simulate", Scenario("ara_shoe_purchase.json"), "--out",
               (d / "out").string()});
  ::unsetenv(kLedgerDirEnv);
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(d / kLedgerFileName));
}

TEST(CliTest, BudgetReportErrors) {
  const fs::path d = FreshDir("budget");
  EXPECT_EQ(Cli({"budget-report", (d / "none.json").string()}).code, kIoError);
  std::ofstream(d / "bad.json") << "{}";
  EXPECT_EQ(Cli({"budget-report", (d / "bad.json").string()}).code,
            kLedgerConflict);
}

TEST(CliTest, AuditExitCodes) {
  const fs::path d = FreshDir("audit");
  CliRun fail = Cli({"audit", kSourceDir + "/audits/too_small_tau.json"});
  EXPECT_EQ(fail.code, kAuditFailed);
  EXPECT_NE(fail.err.find("FAIL: audit_tdlap"), std::string::npos) << fail.err;

  CliRun walk = Cli({"audit", kSourceDir + "/audits/walkthrough.json",
                  "--disable-noise", "--report", (d / "r.jsonl").string()});
  EXPECT_EQ(walk.code, kOk) << walk.err;
  EXPECT_NE(Slurp(d / "r.jsonl").find("\"verdict\":\"pass\""), std::string::npos);

  std::ofstream(d / "bad.json") << R"({"format": "x"})";
  EXPECT_EQ(Cli({"audit", (d / "bad.json").string()}).code, kSchemaError);
}

}  // namespace
}  // namespace sandbox_dp::cli
