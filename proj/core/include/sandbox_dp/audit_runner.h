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

// Audit suites and the config-driven runner behind `sandbox_dp audit`.
//
// A config is a JSON document:
//
//   {"format": "sandbox-dp-audit/1", "checks": [{"type": ..., ...}, ...]}
//
// Check types: tdlap, tdlap_grid, tdlap_tail, dlap_untruncated, event_irr,
// rollout, rollout_trace, msr_exact, scenario. Each check yields one or more
// records.

#ifndef SANDBOX_DP_AUDIT_RUNNER_H_
#define SANDBOX_DP_AUDIT_RUNNER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "sandbox_dp/event_mechanism.h"
#include "sandbox_dp/interactive.h"
#include "sandbox_dp/random.h"
#include "sandbox_dp/rollout_trace.h"
#include "sandbox_dp/summary_mechanism.h"

namespace sandbox_dp {

inline constexpr std::string_view kAuditFormat = "sandbox-dp-audit/1";

struct AuditRecord {
  std::string check;
  // Compact JSON describing the instance.
  std::string instance;
  long double computed = 0.0L;
  long double bound = 0.0L;
  bool pass = false;
};

struct AuditSummary {
  std::vector<AuditRecord> records;
  bool pass = true;
  // "<check> <instance>" of the first failing record.
  std::optional<std::string> first_failure;

  void Add(AuditRecord record);
  void Append(const std::vector<AuditRecord>& records);
};

struct TdlapGrid {
  std::vector<int> dims = {1, 2, 3};
  std::vector<int64_t> l1 = {1, 2, 3, 4};
  std::vector<int64_t> l0 = {1, 2};
  std::vector<double> eps = {0.5, 1.0, 2.0};
  std::vector<double> delta = {0.1, 0.01};
};

// For each grid point with l0 <= min(d, l1), every u - v (up to sign and
// coordinate order) with ||u - v||_1 <= l1 and ||u - v||_0 <= l0 is audited
// with u = 0 and tau from the caps.
absl::StatusOr<std::vector<AuditRecord>> TdlapGridAudit(const TdlapGrid& grid);

// For each (l1, l0, eps, delta): the tail at shift l1 is <= delta, both at
// tau = ComputeTau(...) and at the smallest tau >= ln(1/delta)/a + l1.
absl::StatusOr<std::vector<AuditRecord>> TdlapTailAudit(const TdlapGrid& grid);

struct EventIrrSuite {
  uint64_t seed = 1;
  int specs = 20;
  int64_t max_outputs = 50;
  std::vector<double> eps = {0.5, 1.0, 1.0986122886681098, 2.0};
};

// A trigger spec and cap whose output set has 2..max_outputs members.
struct RandomEventSource {
  TriggerSpec spec;
  int max_reports = 1;
};
RandomEventSource RandomEventSourceFor(Rng& rng, int64_t max_outputs);

// Scripted adversaries against a two-unit event mechanism: units
// Source("x") and Source("y"). Each returns cumulative databases and
// queries for the current step.
std::vector<Adversary<MerMechanism>> ScriptedEventAdversaries(
    const MerParams& params, uint64_t seed);

// Exact transcript distributions for D and D^{-x}, for every random spec,
// every scripted adversary, and both units. Bound: hockey-stick at eps <=
// 1e-12.
absl::StatusOr<std::vector<AuditRecord>> EventIrrAudit(
    const EventIrrSuite& suite);

struct RolloutSuite {
  uint64_t seed = 1;
  int scenarios = 100;
};

// Result of one randomized adaptive summary-mechanism run against D and
// D^{-x} in lockstep.
struct RolloutRun {
  std::vector<bool> aborts_d;
  std::vector<bool> aborts_neighbour;
  RolloutTrace trace_d;
  RolloutTrace trace_neighbour;
  std::string removed;
};
absl::StatusOr<RolloutRun> RunRandomRolloutScenario(uint64_t seed);

// Per scenario: rollout audits of both traces and turn-identical aborts.
absl::StatusOr<std::vector<AuditRecord>> RolloutAudit(const RolloutSuite& suite);

// Two units, two reports, two keys, A1 = A0 = 2, per-turn (0.5, 0.05),
// caps (1, 0.1); an adaptive two-turn adversary. Exact transcripts for D and
// D^{-x} for each unit, compared at the caps.
absl::StatusOr<std::vector<AuditRecord>> SmallMsrExactAudit();

struct AuditOptions {
  // Runs "scenario" checks with noise off and truthful event-level answers.
  bool disable_noise = false;
};

// Runs a scenario file and compares its report and summary lines with the
// expected objects; only fields present in an expected object are compared.
absl::StatusOr<std::vector<AuditRecord>> ScenarioExpectationAudit(
    const std::string& scenario_path, std::string_view expected_reports_json,
    std::string_view expected_summaries_json, const AuditOptions& options);

// Runs every check in `config_json`. Relative paths resolve against
// `base_dir`.
absl::StatusOr<AuditSummary> RunAuditConfig(std::string_view config_json,
                                            const std::string& base_dir,
                                            const AuditOptions& options = {});

// One JSON line per record: check, instance, computed, bound, verdict.
std::string FormatAuditReport(const AuditSummary& summary);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_AUDIT_RUNNER_H_
