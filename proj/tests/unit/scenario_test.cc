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

#include "sandbox_dp/scenario.h"

#include <fstream>
#include <sstream>
#include <string>

#include "absl/strings/str_split.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace sandbox_dp {
namespace {

using json = nlohmann::ordered_json;

std::string ReadScenario(const std::string& name) {
  std::ifstream in(std::string(SANDBOX_DP_SOURCE_DIR) + "/scenarios/" + name);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> Lines(const std::string& jsonl) {
  std::vector<json> out;
  for (absl::string_view line : absl::StrSplit(jsonl, '\n', absl::SkipEmpty())) {
    out.push_back(json::parse(std::string(line)));
  }
  return out;
}

absl::StatusOr<SimulationOutput> RunNoiseless(const std::string& name) {
  absl::StatusOr<Scenario> sc = ParseScenario(ReadScenario(name));
  if (!sc.ok()) return sc.status();
  SimulationOptions options;
  options.noise = NoiseMode::kDisabledForAudit;
  return RunSimulation(*sc, std::nullopt, options);
}

TEST(ParseDurationTest, Forms) {
  EXPECT_EQ(*ParseDuration("0"), 0);
  EXPECT_EQ(*ParseDuration("90"), 90);
  EXPECT_EQ(*ParseDuration("1d2h"), kTicksPerDay + 2 * 3600);
  EXPECT_EQ(*ParseDuration("10m"), 600);
  EXPECT_EQ(*ParseDuration("1h30s"), 3630);
  EXPECT_FALSE(ParseDuration("").ok());
  EXPECT_FALSE(ParseDuration("2x").ok());
  EXPECT_FALSE(ParseDuration("d").ok());
  EXPECT_FALSE(ParseDuration("-1").ok());
}

TEST(ParseScenarioTest, RejectsMalformed) {
  EXPECT_FALSE(ParseScenario("{").ok());
  EXPECT_FALSE(ParseScenario("[]").ok());
  EXPECT_FALSE(ParseScenario(R"({"format": "other"})").ok());
  json doc = json::parse(ReadScenario("ara_shoe_purchase.json"));
  doc["timeline"][1]["value"] = 70000;
  EXPECT_FALSE(ParseScenario(doc.dump()).ok());
  doc = json::parse(ReadScenario("ara_shoe_purchase.json"));
  doc["timeline"][0]["type"] = "teleport";
  EXPECT_FALSE(ParseScenario(doc.dump()).ok());
  doc = json::parse(ReadScenario("ara_shoe_purchase.json"));
  doc["requests"][0]["mode"] = "discovery";
  doc["requests"][0]["delta"] = "0";
  EXPECT_FALSE(ParseScenario(doc.dump()).ok());
  doc = json::parse(ReadScenario("ara_shoe_purchase.json"));
  doc["params"].erase("delta_star");
  EXPECT_FALSE(ParseScenario(doc.dump()).ok());
}

TEST(ParseScenarioTest, ErrorNamesLocation) {
  json doc = json::parse(ReadScenario("ara_shoe_purchase.json"));
  doc["timeline"][1].erase("dest");
  absl::Status s = ParseScenario(doc.dump()).status();
  EXPECT_TRUE(absl::IsInvalidArgument(s));
  EXPECT_NE(s.message().find("dest"), absl::string_view::npos) << s;
}

TEST(RunSimulationTest, AraNoiseless) {
  absl::StatusOr<SimulationOutput> out = RunNoiseless("ara_shoe_purchase.json");
  ASSERT_TRUE(out.ok()) << out.status();
  std::vector<json> reports = Lines(out->reports_jsonl);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0]["key"], "000000000000000a000000000000005f");
  EXPECT_EQ(reports[0]["value"], 70);
  std::vector<json> summaries = Lines(out->summaries_jsonl);
  ASSERT_EQ(summaries.size(), 1u);
  EXPECT_EQ(summaries[0]["entries"][0]["value"], 70);
  ASSERT_TRUE(out->ledger.has_value());
  EXPECT_EQ(out->ledger->records.size(), 1u);
  EXPECT_EQ(out->aborted_requests, 0);
}

TEST(RunSimulationTest, PaaNoiseless) {
  absl::StatusOr<SimulationOutput> out = RunNoiseless("paa_first_sighting.json");
  ASSERT_TRUE(out.ok()) << out.status();
  std::vector<json> reports = Lines(out->reports_jsonl);
  ASSERT_EQ(reports.size(), 5u);
  EXPECT_EQ(reports[0]["value"], 32768);
  EXPECT_EQ(reports[1]["value"], 32768);
  EXPECT_TRUE(reports[2]["value"].is_null());
  EXPECT_EQ(reports[3]["value"], 32768);
  EXPECT_TRUE(reports[4]["value"].is_null());
}

TEST(RunSimulationTest, EventLevelNoiseless) {
  absl::StatusOr<SimulationOutput> out = RunNoiseless("event_level_shoe_buckets.json");
  ASSERT_TRUE(out.ok()) << out.status();
  std::vector<json> reports = Lines(out->reports_jsonl);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0]["trig_data"], 0);
  EXPECT_EQ(reports[0]["bucket"], 20);
  EXPECT_EQ(reports[0]["time"], 2 * kTicksPerDay);
  EXPECT_EQ(reports[1]["bucket"], 10);
  EXPECT_EQ(reports[2]["bucket"], 50);
  EXPECT_EQ(reports[2]["time"], 5 * kTicksPerDay);
  EXPECT_FALSE(out->ledger.has_value());
  EXPECT_TRUE(out->summaries_jsonl.empty());
}

TEST(RunSimulationTest, SameSeedSameOutput) {
  for (const char* name : {"ara_shoe_purchase.json", "paa_first_sighting.json",
                           "event_level_shoe_buckets.json"}) {
    absl::StatusOr<Scenario> sc = ParseScenario(ReadScenario(name));
    ASSERT_TRUE(sc.ok()) << name;
    auto a = RunSimulation(*sc, std::nullopt);
    auto b = RunSimulation(*sc, std::nullopt);
    ASSERT_TRUE(a.ok() && b.ok()) << name;
    EXPECT_EQ(a->reports_jsonl, b->reports_jsonl) << name;
    EXPECT_EQ(a->summaries_jsonl, b->summaries_jsonl) << name;
    EXPECT_EQ(a->transcript_jsonl, b->transcript_jsonl) << name;
  }
}

TEST(RunSimulationTest, LedgerCarriesAcrossRuns) {
  absl::StatusOr<Scenario> sc = ParseScenario(ReadScenario("ara_shoe_purchase.json"));
  ASSERT_TRUE(sc.ok());
  sc->eps_star = BudgetAmount::FromInteger(1);
  auto first = RunSimulation(*sc, std::nullopt);
  ASSERT_TRUE(first.ok());
  EXPECT_EQ(first->aborted_requests, 0);
  auto second = RunSimulation(*sc, first->ledger);
  ASSERT_TRUE(second.ok());
  EXPECT_EQ(second->aborted_requests, 1);
  // Caps that disagree with the ledger are a precondition failure.
  sc->eps_star = BudgetAmount::FromInteger(2);
  EXPECT_TRUE(absl::IsFailedPrecondition(
      RunSimulation(*sc, first->ledger).status()));
}

}  // namespace
}  // namespace sandbox_dp
