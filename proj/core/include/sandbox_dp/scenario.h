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

// Scenario files and the deterministic simulation driven by them.
//
// A scenario is a JSON document:
//
//   {
//     "format": "sandbox-dp-scenario/1",
//     "api": "ara-summary" | "paa-summary" | "event-level",
//     "seed": 7,
//     "params": {...},
//     "timeline": [...],
//     "requests": [...]
//   }
//
// Times are integer ticks or duration strings such as "1d", "2d12h" or
// "1d23h59m59s". Keys are hex strings of up to 32 digits. Budget values are
// decimal strings. See README.md for the full schema.

#ifndef SANDBOX_DP_SCENARIO_H_
#define SANDBOX_DP_SCENARIO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "sandbox_dp/aggregation_service.h"
#include "sandbox_dp/budget_amount.h"
#include "sandbox_dp/contribution_program.h"
#include "sandbox_dp/event_mechanism.h"
#include "sandbox_dp/sr_clients.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

inline constexpr std::string_view kScenarioFormat = "sandbox-dp-scenario/1";

enum class ApiKind { kAraSummary, kPaaSummary, kEventLevel };

struct AraSourceStep {
  SourceRegistration source;
};
struct AraTriggerStep {
  TriggerRegistration trigger;
};
struct PaaEventStep {
  Tick time = 0;
  std::string device;
  DeclarativeProgram program;
};
struct EventSourceStep {
  EventSource source;
};
struct EventTriggerStep {
  EventTrigger trigger;
};
using TimelineStep = std::variant<AraSourceStep, AraTriggerStep, PaaEventStep,
                                  EventSourceStep, EventTriggerStep>;

// One aggregation request of the scripted analyst.
struct RequestStep {
  // Indices into the timeline's aggregatable reports; nullopt means all.
  std::optional<std::vector<size_t>> reports;
  double eps = 1.0;
  double delta = 0.0;
  AggregationMode mode = ListedKeys{};
};

struct Scenario {
  ApiKind api = ApiKind::kAraSummary;
  uint64_t seed = 0;
  ContributionBounds bounds;
  BudgetAmount eps_star = BudgetAmount::FromInteger(kDefaultEpsStar);
  BudgetAmount delta_star;
  Tick window_ticks = kDefaultPaaWindowTicks;
  // Per-source randomized-response parameter for event-level scenarios.
  double event_eps = 0.0;
  std::vector<TimelineStep> timeline;
  std::vector<RequestStep> requests;
};

// Integer ticks, or a duration string made of <n>d, <n>h, <n>m, <n>s parts.
absl::StatusOr<Tick> ParseDuration(std::string_view text);

// Schema validation happens here; a parsed scenario always simulates.
absl::StatusOr<Scenario> ParseScenario(std::string_view json_text);

struct SimulationOutput {
  // Aggregatable reports (summary APIs) or event reports (event level).
  std::string reports_jsonl;
  // One line per aggregation request. Empty for event-level scenarios.
  std::string summaries_jsonl;
  // One line per timeline step.
  std::string transcript_jsonl;
  // Rollout trace. Empty for event-level scenarios.
  std::string trace_jsonl;
  // Updated ledger; set for summary APIs only.
  std::optional<LedgerSnapshot> ledger;
  int aborted_requests = 0;
};

struct SimulationOptions {
  // kDisabledForAudit releases exact sums and makes every event-level source
  // answer truthfully. Only the audit command sets it.
  NoiseMode noise = NoiseMode::kDiscreteLaplace;
};

// Runs the scenario. Summary APIs charge `ledger` (or a fresh one with the
// scenario's caps); its caps must match the scenario's.
absl::StatusOr<SimulationOutput> RunSimulation(
    const Scenario& scenario, const std::optional<LedgerSnapshot>& ledger,
    const SimulationOptions& options = {});

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_SCENARIO_H_
