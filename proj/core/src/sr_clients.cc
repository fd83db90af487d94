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

#include "sandbox_dp/sr_clients.h"

#include <utility>

#include "absl/strings/str_cat.h"

namespace sandbox_dp {

absl::Status ContributionBounds::Validate() const {
  if (contribution_budget <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "contribution budget must be positive, got ", contribution_budget));
  }
  if (sparsity_budget <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sparsity budget must be positive, got ", sparsity_budget));
  }
  return absl::OkStatus();
}

absl::StatusOr<AraSummaryClient> AraSummaryClient::Create(
    ContributionBounds bounds, AttributionScan scan) {
  if (absl::Status s = bounds.Validate(); !s.ok()) return s;
  return AraSummaryClient(bounds, scan);
}

absl::Status AraSummaryClient::RegisterSource(SourceRegistration source) {
  if (source.expiry < source.registered_at) {
    return absl::InvalidArgumentError(
        absl::StrCat("source ", source.src_id, " expires before it registers"));
  }
  for (const Entry& e : entries_) {
    if (e.source.src_id == source.src_id) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate srcId ", source.src_id));
    }
  }
  if (!entries_.empty() && source.seq <= entries_.back().source.seq) {
    return absl::InvalidArgumentError(absl::StrCat(
        "registration seq ", source.seq, " is not above ",
        entries_.back().source.seq));
  }
  entries_.push_back(Entry{std::move(source), UnitUsage{}});
  return absl::OkStatus();
}

TriggerOutcome AraSummaryClient::RegisterTrigger(
    const TriggerRegistration& trigger, Tick now, Rng& rng) {
  const ReportId id = rng.NextReportId();
  if (trigger.value > 0) {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      const SourceRegistration& s = it->source;
      if (!SourceActive(s, now)) continue;
      if (trigger.dest != s.dest || !FiltersMatch(s.filters, trigger.filters)) {
        continue;
      }
      if (it->usage.Admits(trigger.value, bounds_)) {
        it->usage.contributions += 1;
        it->usage.total_value += trigger.value;
        return TriggerOutcome{
            AggregatableReport{
                id, Contribution{CombineKeys(s.key, trigger.key), trigger.value}},
            s.src_id};
      }
      if (scan_ == AttributionScan::kHaltOnBudgetFailure) break;
    }
  }
  return TriggerOutcome{AggregatableReport::Null(id), std::nullopt};
}

std::optional<UnitUsage> AraSummaryClient::usage(
    std::string_view src_id) const {
  for (const Entry& e : entries_) {
    if (e.source.src_id == src_id) return e.usage;
  }
  return std::nullopt;
}

std::vector<SourceRegistration> AraSummaryClient::sources() const {
  std::vector<SourceRegistration> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.source);
  return out;
}

absl::StatusOr<PaaSummaryClient> PaaSummaryClient::Create(
    ContributionBounds bounds) {
  if (absl::Status s = bounds.Validate(); !s.ok()) return s;
  return PaaSummaryClient(bounds);
}

absl::StatusOr<AggregatableReport> PaaSummaryClient::RegisterEvent(
    std::string_view device, int64_t window,
    const ContributionProgram& program, Rng& rng) {
  auto it = devices_.find(device);
  if (it == devices_.end()) {
    it = devices_.emplace(std::string(device), DeviceState{}).first;
  }
  DeviceState& state = it->second;
  if (state.seen && window < state.window) {
    return absl::FailedPreconditionError(
        absl::StrCat("device ", std::string(device), " moved back from window ",
                     state.window, " to ", window));
  }
  if (!state.seen || window != state.window) {
    state.window = window;
    state.usage = UnitUsage{};
    state.seen = true;
  }

  ProgramOutput out = program(state.storage);
  state.storage = std::move(out.next_state);
  const ReportId id = rng.NextReportId();
  if (out.value > 0 && state.usage.Admits(out.value, bounds_)) {
    state.usage.contributions += 1;
    state.usage.total_value += out.value;
    return AggregatableReport{id, Contribution{out.key, out.value}};
  }
  return AggregatableReport::Null(id);
}

const StorageState& PaaSummaryClient::storage(std::string_view device) const {
  static const StorageState kEmpty;
  auto it = devices_.find(device);
  return it == devices_.end() ? kEmpty : it->second.storage;
}

UnitUsage PaaSummaryClient::usage(std::string_view device,
                                  int64_t window) const {
  auto it = devices_.find(device);
  if (it == devices_.end() || it->second.window != window) return UnitUsage{};
  return it->second.usage;
}

int64_t PaaSummaryClient::WindowOf(Tick t, Tick window_ticks) {
  // Floor division so negative ticks land in negative windows.
  int64_t q = t / window_ticks;
  if ((t % window_ticks != 0) && ((t < 0) != (window_ticks < 0))) --q;
  return q;
}

}  // namespace sandbox_dp
