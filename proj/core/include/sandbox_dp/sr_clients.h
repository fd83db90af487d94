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

// Browser-side generators of aggregatable reports.
//
// Both clients emit exactly one report per trigger/event, real or null, each
// with a fresh report id, so the presence of a report reveals nothing about
// attribution. Contributions are bounded per privacy unit: at most A0
// non-zero contributions whose values sum to at most A1.

#ifndef SANDBOX_DP_SR_CLIENTS_H_
#define SANDBOX_DP_SR_CLIENTS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandbox_dp/random.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

struct ContributionBounds {
  // A1: cap on the summed value per privacy unit.
  int64_t contribution_budget = kDefaultContributionBudget;
  // A0: cap on the number of non-zero contributions per privacy unit.
  int64_t sparsity_budget = 1;

  absl::Status Validate() const;

  friend bool operator==(const ContributionBounds&,
                         const ContributionBounds&) = default;
};

// Running totals for one privacy unit.
struct UnitUsage {
  int64_t contributions = 0;  // L0
  int64_t total_value = 0;    // L1

  bool Admits(int64_t value, const ContributionBounds& bounds) const {
    return contributions + 1 <= bounds.sparsity_budget &&
           total_value + value <= bounds.contribution_budget;
  }
};

// What to do when the most recent matching source lacks budget.
enum class AttributionScan {
  // Keep scanning older matching sources.
  kContinue,
  // Stop and emit a null report.
  kHaltOnBudgetFailure,
};

struct TriggerOutcome {
  AggregatableReport report;
  // srcId of the charged source; empty for null reports.
  std::optional<std::string> attributed_source;
};

// Attribution Reporting summary client with last-touch attribution and
// per-source contribution bounding.
class AraSummaryClient {
 public:
  static absl::StatusOr<AraSummaryClient> Create(
      ContributionBounds bounds,
      AttributionScan scan = AttributionScan::kContinue);

  // Rejects a duplicate srcId or a seq not above every registered seq.
  absl::Status RegisterSource(SourceRegistration source);

  TriggerOutcome RegisterTrigger(const TriggerRegistration& trigger, Tick now,
                                 Rng& rng);

  std::optional<UnitUsage> usage(std::string_view src_id) const;
  // Sources in registration order.
  std::vector<SourceRegistration> sources() const;
  const ContributionBounds& bounds() const { return bounds_; }

 private:
  struct Entry {
    SourceRegistration source;
    UnitUsage usage;
  };

  AraSummaryClient(ContributionBounds bounds, AttributionScan scan)
      : bounds_(bounds), scan_(scan) {}

  ContributionBounds bounds_;
  AttributionScan scan_;
  // Ascending seq; attribution walks it backwards.
  std::vector<Entry> entries_;
};

// Per-device shared storage. The empty map is the distinguished empty state.
using StorageState = std::map<std::string, std::string>;

struct ProgramOutput {
  StorageState next_state;
  Key key;
  int64_t value = 0;
};

// Runs inside the client against one device's storage; its outputs are never
// shown to the ad-tech.
using ContributionProgram = std::function<ProgramOutput(const StorageState&)>;

// Private Aggregation client with budgets per (device, time window).
class PaaSummaryClient {
 public:
  static absl::StatusOr<PaaSummaryClient> Create(ContributionBounds bounds);

  // Runs `program` on the device's storage, then emits a report if the value
  // is positive and fits the window's budgets. Storage is updated either way.
  // Fails only if `window` precedes a window already seen for the device.
  absl::StatusOr<AggregatableReport> RegisterEvent(
      std::string_view device, int64_t window,
      const ContributionProgram& program, Rng& rng);

  const StorageState& storage(std::string_view device) const;
  UnitUsage usage(std::string_view device, int64_t window) const;
  const ContributionBounds& bounds() const { return bounds_; }

  // Window index containing `t` for windows of `window_ticks`.
  static int64_t WindowOf(Tick t, Tick window_ticks);

 private:
  struct DeviceState {
    StorageState storage;
    int64_t window = 0;
    bool seen = false;
    // Counters for `window` only; earlier windows are closed.
    UnitUsage usage;
  };

  explicit PaaSummaryClient(ContributionBounds bounds) : bounds_(bounds) {}

  ContributionBounds bounds_;
  std::map<std::string, DeviceState, std::less<>> devices_;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_SR_CLIENTS_H_
