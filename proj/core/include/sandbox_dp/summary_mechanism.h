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

// End-to-end interactive summary-report mechanism over (unit, report id)
// databases: per-unit contribution bounding, per-report budget bounding, and
// noisy per-key sums. Also the neighbouring-database transforms, the
// per-unit privacy rollout accountant, and group-privacy arithmetic.

#ifndef SANDBOX_DP_SUMMARY_MECHANISM_H_
#define SANDBOX_DP_SUMMARY_MECHANISM_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandbox_dp/aggregation_service.h"
#include "sandbox_dp/budget_amount.h"
#include "sandbox_dp/interactive.h"
#include "sandbox_dp/random.h"
#include "sandbox_dp/sr_clients.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

// A privacy unit: a source (ARA), a (device, window) pair (PAA), or the
// dummy source that absorbs removed records.
struct UnitId {
  std::string name;
  std::optional<int64_t> window;
  bool dummy = false;

  static UnitId Dummy() { return UnitId{"", std::nullopt, true}; }
  static UnitId Source(std::string name) {
    return UnitId{std::move(name), std::nullopt, false};
  }
  static UnitId DeviceWindow(std::string device, int64_t window) {
    return UnitId{std::move(device), window, false};
  }

  // "<dummy>", "name" or "name@window".
  std::string ToString() const;

  friend bool operator==(const UnitId&, const UnitId&) = default;
  friend bool operator<(const UnitId& a, const UnitId& b) {
    if (a.dummy != b.dummy) return a.dummy < b.dummy;
    if (a.name != b.name) return a.name < b.name;
    return a.window < b.window;
  }
};

enum class DbFlavor { kAra, kPaa };

// One (x, y) record. For PAA records `storage` is the shared-storage state
// seen by the event; nullopt is the empty state. ARA records leave it unset.
struct MsrRecord {
  UnitId x;
  ReportId y;
  std::optional<std::string> storage;

  friend bool operator==(const MsrRecord&, const MsrRecord&) = default;
};

struct MeasurementDatabase {
  DbFlavor flavor = DbFlavor::kAra;
  std::vector<MsrRecord> records;

  friend bool operator==(const MeasurementDatabase&,
                         const MeasurementDatabase&) = default;
};

// True for records whose attribution has been removed: the dummy source in
// ARA, the empty storage state in PAA. Such records contribute (0, 0).
bool IsBlank(DbFlavor flavor, const MsrRecord& record);

struct MsrQuery {
  double eps = 1.0;
  double delta = 0.0;
  std::set<ReportId> reports;  // Y
  // Candidate (key, value) per record. Not called for blank records.
  std::function<Contribution(const MsrRecord&)> f;
};

struct MsrParams {
  ContributionBounds bounds;
  double eps_star = static_cast<double>(kDefaultEpsStar);
  double delta_star = 0.0;
  // Keys summed in phase 3; contributions to other keys are never released.
  std::vector<Key> key_universe;
  NoiseMode noise = NoiseMode::kDiscreteLaplace;

  absl::Status Validate() const;
};

struct MsrResponse {
  bool aborted = false;
  // Key-universe order.
  std::vector<SummaryEntry> released;

  friend bool operator==(const MsrResponse&, const MsrResponse&) = default;
  friend bool operator<(const MsrResponse& a, const MsrResponse& b);
};

struct AdmittedReport {
  UnitId x;
  ReportId y;
  Contribution contribution;

  friend bool operator==(const AdmittedReport&,
                         const AdmittedReport&) = default;
};

// Everything the rollout accountant needs about one turn.
struct MsrTurnTrace {
  double eps = 0.0;
  double delta = 0.0;
  std::vector<ReportId> reports;  // sorted
  std::vector<AdmittedReport> admitted;
  bool aborted = false;

  friend bool operator==(const MsrTurnTrace&, const MsrTurnTrace&) = default;
};

class MsrMechanism {
 public:
  using Database = MeasurementDatabase;
  using Query = MsrQuery;
  using Response = MsrResponse;

  static absl::StatusOr<MsrMechanism> Create(MsrParams params);

  // Queries with eps <= 0 or delta outside [0, 1] abort without touching the
  // state. See ValidateQuery.
  Response Step(const Database& db, const Query& q, Rng& rng);

  // Exact distribution of one step. Requires truncated noise (delta > 0) or
  // noise disabled; fails with ResourceExhausted past `max_outcomes`.
  absl::StatusOr<std::vector<Branch<MsrMechanism>>> StepOutcomes(
      const Database& db, const Query& q) const;

  static absl::Status ValidateQuery(const Query& q);

  const MsrParams& params() const { return params_; }
  UnitUsage usage(const UnitId& x) const;
  BudgetUsage budget(ReportId y) const;
  const std::vector<MsrTurnTrace>& trace() const { return trace_; }

  void set_max_outcomes(int64_t n) { max_outcomes_ = n; }

 private:
  struct Stored {
    UnitId x;
    Contribution contribution;
  };

  explicit MsrMechanism(MsrParams params) : params_(std::move(params)) {}

  // Phases 1 and 2. Returns the exact per-key sums, or nullopt on abort.
  std::optional<std::vector<int64_t>> Admit(const Database& db,
                                            const Query& q);

  MsrParams params_;
  BudgetAmount eps_star_;
  BudgetAmount delta_star_;
  std::map<UnitId, UnitUsage> usage_;
  std::map<ReportId, BudgetUsage> budgets_;
  // R, keyed by report id. A report id is admitted at most once.
  std::map<ReportId, Stored> reports_;
  std::vector<MsrTurnTrace> trace_;
  int64_t max_outcomes_ = 1000000;
};

// Neighbouring-database targets.
struct RemoveSource {
  std::string src_id;
};
struct RemoveDeviceWindow {
  std::string device;
  int64_t window = 0;
};
// Every window of `device` strictly after `after_window`.
struct RemoveDeviceAfter {
  std::string device;
  int64_t after_window = 0;
};
using RemovalTarget =
    std::variant<RemoveSource, RemoveDeviceWindow, RemoveDeviceAfter>;

// ARA: (x, y) -> (dummy, y). PAA: storage of matching records -> empty.
// A target of the wrong flavor matches nothing.
MeasurementDatabase RemoveUnit(const MeasurementDatabase& db,
                               const RemovalTarget& target);

struct RolloutSums {
  long double eps = 0.0L;
  long double delta = 0.0L;
};

struct RolloutAccount {
  // Per unit, per turn (eps_{x,t}, delta_{x,t}). Units with no admitted
  // report are absent. The dummy unit is never listed.
  std::map<UnitId, std::vector<RolloutSums>> per_turn;

  RolloutSums Total(const UnitId& x) const;
};

// Replays the trace: eps_{x,t} = eps_t / A1 * sum of v_y over y in Y_t
// admitted for x so far; delta_{x,t} = delta_t / A0 * their count. Aborted
// turns consume nothing.
RolloutAccount ComputeRollout(const std::vector<MsrTurnTrace>& trace,
                              const ContributionBounds& bounds);

struct PrivacyPair {
  double eps = 0.0;
  double delta = 0.0;
};

// k-fold group privacy: (k eps, delta (e^{k eps} - 1) / (e^{eps} - 1)).
absl::StatusOr<PrivacyPair> GroupPrivacy(double eps, double delta, int64_t k);

// Parameters between removal points t1 < t2: group privacy with
// k = t2 - t1.
absl::StatusOr<PrivacyPair> GradualExpiration(double eps, double delta,
                                              int64_t t1, int64_t t2);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_SUMMARY_MECHANISM_H_
