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

// Event-level reports: the noiseless client, the finite set of report
// configurations a source can produce, interactive randomized response over
// that set, and the per-source mechanism built from it.
//
// A configuration is a count per (spec entry, reporting window) slot. Slots
// are ordered entry-major. Buckets of an entry are always reported in
// increasing order, so the counts determine which buckets were reported.

#ifndef SANDBOX_DP_EVENT_MECHANISM_H_
#define SANDBOX_DP_EVENT_MECHANISM_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "sandbox_dp/interactive.h"
#include "sandbox_dp/random.h"
#include "sandbox_dp/summary_mechanism.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

inline constexpr int kMaxSpecEntries = 32;
inline constexpr int kMaxReportingWindows = 5;
inline constexpr int kTriggerDataValues = 32;

struct TriggerSpecEntry {
  int trig_data = 0;
  // Offsets from source registration, strictly increasing, positive.
  std::vector<Tick> windows;
  // Strictly increasing, positive.
  std::vector<int64_t> buckets;
};

struct TriggerSpec {
  std::vector<TriggerSpecEntry> entries;

  absl::Status Validate() const;
  // Index of the entry for `trig_data`, if listed.
  std::optional<int> EntryFor(int trig_data) const;
};

struct EventSource {
  std::string src_id;
  std::string dest;
  Tick expiry = 0;
  FilterSet filters;
  int max_reports = 3;
  TriggerSpec spec;
  Tick registered_at = 0;
  uint64_t seq = 0;
};

struct EventTrigger {
  std::string dest;
  std::string trig_id;
  FilterSet filters;
  int trig_data = 0;
  int64_t value = 0;
  Tick time = 0;
};

struct EventReport {
  std::string src_id;
  int trig_data = 0;
  int64_t bucket = 0;
  int window_index = 0;
  // Tick at which the window closed.
  Tick time = 0;

  friend bool operator==(const EventReport&, const EventReport&) = default;
};

// V, U, N for one source, independent of attribution.
class SourceCounter {
 public:
  SourceCounter(const TriggerSpec* spec, int max_reports);

  void Add(int entry, int64_t value);
  // Processes the passing of `entry`'s window; returns the reported buckets.
  std::vector<int64_t> PassWindow(int entry);

  int64_t value(int entry) const { return value_[entry]; }
  int64_t last_bucket(int entry) const { return last_bucket_[entry]; }
  int reports_sent() const { return reports_sent_; }

 private:
  const TriggerSpec* spec_;
  int max_reports_;
  std::vector<int64_t> value_;
  std::vector<int64_t> last_bucket_;
  int reports_sent_ = 0;
};

// Noiseless event-level client over many sources. Inputs must arrive in
// non-decreasing time. A window closes at the end of its tick: a trigger at
// the deadline tick still counts toward it.
class EventLevelClient {
 public:
  absl::Status RegisterSource(EventSource source);
  // Closes windows with deadlines before trigger.time, then attributes the
  // trigger. Returns the reports from the closed windows.
  absl::StatusOr<std::vector<EventReport>> RegisterTrigger(
      const EventTrigger& trigger);
  // Closes every window with deadline <= now.
  absl::StatusOr<std::vector<EventReport>> AdvanceTo(Tick now);

  // Source the last trigger was attributed to, if any.
  const std::optional<std::string>& last_attribution() const {
    return last_attribution_;
  }
  const SourceCounter* counter(std::string_view src_id) const;

 private:
  struct Pending {
    Tick deadline;
    uint64_t seq;
    int entry;
    int window;
    friend bool operator<(const Pending& a, const Pending& b) {
      return std::tie(a.deadline, a.seq, a.entry, a.window) <
             std::tie(b.deadline, b.seq, b.entry, b.window);
    }
  };
  struct State {
    std::unique_ptr<EventSource> source;
    SourceCounter counter;
  };

  absl::Status CheckTime(Tick t);
  std::vector<EventReport> Flush(Tick through);
  bool Active(const State& s, Tick now) const;

  std::vector<State> sources_;  // ascending seq
  std::vector<Pending> pending_;  // sorted
  Tick now_ = 0;
  bool started_ = false;
  std::optional<std::string> last_attribution_;
};

using SlotCounts = std::vector<int>;

// The valid configurations O for one source.
class OutputSet {
 public:
  struct Slot {
    int entry;
    int window;
    Tick offset;
  };

  static absl::StatusOr<OutputSet> Enumerate(const TriggerSpec& spec,
                                             int max_reports,
                                             int64_t max_size = 1000000);

  size_t size() const { return members_.size(); }
  const std::vector<SlotCounts>& members() const { return members_; }
  const std::vector<Slot>& slots() const { return slots_; }
  // Distinct window offsets, ascending; step i answers offsets()[i].
  const std::vector<Tick>& step_offsets() const { return step_offsets_; }
  // Slot indices reported at step i.
  const std::vector<int>& step_slots(size_t i) const { return step_slots_[i]; }
  size_t num_steps() const { return step_offsets_.size(); }

  // Per-entry option counts: tuples of per-window counts summing to at most
  // the entry's bucket count.
  std::vector<int64_t> EntryOptionCounts() const;

  // Counts at step i of a full configuration.
  SlotCounts Project(const SlotCounts& full, size_t step) const;
  // True iff `counts_so_far` (steps 0..k concatenated as full-length slot
  // counts with zeros elsewhere) extends to a member.
  bool IsValidPartial(const SlotCounts& full_partial) const;

  const TriggerSpec& spec() const { return spec_; }
  int max_reports() const { return max_reports_; }

 private:
  TriggerSpec spec_;
  int max_reports_ = 0;
  std::vector<Slot> slots_;
  std::vector<SlotCounts> members_;
  std::vector<Tick> step_offsets_;
  std::vector<std::vector<int>> step_slots_;
};

// Trigger attributed to a source, relative to its registration.
struct EventRecord {
  UnitId x;
  std::string trig_id;
  int trig_data = 0;
  int64_t value = 0;
  Tick offset = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventDatabase {
  std::vector<EventRecord> records;

  friend bool operator==(const EventDatabase&, const EventDatabase&) = default;
};

// Records of unit x (N_D(x)).
std::vector<EventRecord> RecordsOf(const EventDatabase& db, const UnitId& x);
// Moves x's records to the dummy unit.
EventDatabase RemoveEventUnit(const EventDatabase& db, const UnitId& x);

// Full noiseless configuration of one source for the given records.
SlotCounts NoiselessCounts(const OutputSet& outputs,
                           absl::Span<const EventRecord> records);

// The buckets implied by a configuration, as reports.
std::vector<EventReport> ReportsFor(const OutputSet& outputs,
                                    const std::string& src_id,
                                    Tick registered_at,
                                    const SlotCounts& full);

// Probability that randomized response answers truthfully:
// (e^eps - 1) / (e^eps + |O| - 1).
long double TruthfulProbability(double eps, size_t output_set_size);

// State of interactive randomized response for one source.
struct IrrState {
  int64_t step = 0;
  bool committed = false;
  // Index into O of s*, or nullopt for the truthful branch.
  std::optional<size_t> fixed;
  // Answers given so far, as full-length slot counts.
  SlotCounts emitted;

  friend bool operator==(const IrrState&, const IrrState&) = default;
};

// Answer for one step: counts for that step's slots.
using StepCounts = std::vector<int>;
using EventQuery = std::function<StepCounts(absl::Span<const EventRecord>)>;

// Noiseless query for step i: the counts the noiseless client would report
// at that step's deadline.
EventQuery NoiselessStepQuery(std::shared_ptr<const OutputSet> outputs,
                              size_t step);

// One step of randomized response. Commits s* on the first step. A truthful
// answer that cannot extend to a member of O is replaced by zeros.
StepCounts IrrStep(IrrState& state, const OutputSet& outputs, double eps,
                   absl::Span<const EventRecord> events,
                   const EventQuery& query, Rng& rng);

// Exact distribution of one step: (probability, answer, next state).
std::vector<std::tuple<long double, StepCounts, IrrState>> IrrStepOutcomes(
    const IrrState& state, const OutputSet& outputs, double eps,
    absl::Span<const EventRecord> events, const EventQuery& query);

struct MerParams {
  double eps = 1.0;
  std::map<UnitId, std::shared_ptr<const OutputSet>> outputs;
};

// Per-source randomized response driven by a shared database.
class MerMechanism {
 public:
  using Database = EventDatabase;
  // Units without a query answer zeros when truthful.
  using Query = std::map<UnitId, EventQuery>;
  using Response = std::map<UnitId, StepCounts>;

  static absl::StatusOr<MerMechanism> Create(MerParams params);

  // s* for each unit is drawn from rng.Fork(unit) on the first step.
  Response Step(const Database& db, const Query& q, Rng& rng);
  absl::StatusOr<std::vector<Branch<MerMechanism>>> StepOutcomes(
      const Database& db, const Query& q) const;

  const IrrState& state(const UnitId& x) const { return states_.at(x); }
  const MerParams& params() const { return params_; }
  void set_max_outcomes(int64_t n) { max_outcomes_ = n; }

 private:
  explicit MerMechanism(MerParams params);

  MerParams params_;
  std::map<UnitId, IrrState> states_;
  int64_t max_outcomes_ = 1000000;
};

// Noiseless queries for step `step` for every unit in `params`.
MerMechanism::Query NoiselessMerQuery(const MerParams& params, size_t step);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_EVENT_MECHANISM_H_
