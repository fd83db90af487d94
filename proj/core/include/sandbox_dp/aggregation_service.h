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

// Batch aggregation of aggregatable reports into noisy summary reports, and
// the per-report privacy budget ledger that gates requerying.

#ifndef SANDBOX_DP_AGGREGATION_SERVICE_H_
#define SANDBOX_DP_AGGREGATION_SERVICE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/base/thread_annotations.h"
#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/synchronization/mutex.h"
#include "absl/types/span.h"
#include "sandbox_dp/budget_amount.h"
#include "sandbox_dp/random.h"
#include "sandbox_dp/sr_clients.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

// Default per-report epsilon cap.
inline constexpr int64_t kDefaultEpsStar = 64;

struct BudgetUsage {
  BudgetAmount eps;
  BudgetAmount delta;

  friend bool operator==(const BudgetUsage&, const BudgetUsage&) = default;
};

struct LedgerRecord {
  ReportId id;
  BudgetUsage used;

  friend bool operator==(const LedgerRecord&, const LedgerRecord&) = default;
};

struct LedgerSnapshot {
  BudgetAmount eps_star;
  BudgetAmount delta_star;
  // Sorted by id; ids never charged are absent.
  std::vector<LedgerRecord> records;

  friend bool operator==(const LedgerSnapshot&,
                         const LedgerSnapshot&) = default;
};

// Accumulated (eps, delta) per report id under global caps. All amounts are
// exact decimals so repeated charges never drift across a cap.
//
// Thread-safe. TryCharge is linearizable: each call either charges every id
// or none.
class PrivacyBudgetLedger {
 public:
  PrivacyBudgetLedger(BudgetAmount eps_star, BudgetAmount delta_star);

  PrivacyBudgetLedger(const PrivacyBudgetLedger&) = delete;
  PrivacyBudgetLedger& operator=(const PrivacyBudgetLedger&) = delete;

  // Fails if any record exceeds the caps.
  static absl::StatusOr<std::unique_ptr<PrivacyBudgetLedger>> FromSnapshot(
      const LedgerSnapshot& snapshot);

  // Returns ResourceExhausted naming the first offending id if any id would
  // pass a cap; nothing is charged in that case. Duplicate ids are charged
  // once. On failure `culprit`, if given, receives the offending id.
  absl::Status TryCharge(absl::Span<const ReportId> ids, BudgetAmount eps,
                         BudgetAmount delta, ReportId* culprit = nullptr);

  BudgetUsage Consumed(ReportId id) const;
  // (eps_star - B_eps(r), delta_star - B_delta(r)); full caps for unseen ids.
  BudgetUsage Remaining(ReportId id) const;

  LedgerSnapshot Snapshot() const;

  BudgetAmount eps_star() const { return eps_star_; }
  BudgetAmount delta_star() const { return delta_star_; }

 private:
  const BudgetAmount eps_star_;
  const BudgetAmount delta_star_;
  mutable absl::Mutex mu_;
  absl::flat_hash_map<ReportId, BudgetUsage> used_ ABSL_GUARDED_BY(mu_);
};

struct ListedKeys {
  std::vector<Key> keys;
};
struct KeyDiscovery {};
using AggregationMode = std::variant<ListedKeys, KeyDiscovery>;

struct AggregationRequest {
  std::vector<AggregatableReport> batch;
  double eps = 1.0;
  double delta = 0.0;
  AggregationMode mode = ListedKeys{};
};

struct SummaryEntry {
  Key key;
  int64_t value = 0;

  friend bool operator==(const SummaryEntry&, const SummaryEntry&) = default;
};

struct SummaryReport {
  // Listed mode: request order. Key discovery: ascending key.
  std::vector<SummaryEntry> entries;
  // Release threshold; set only in key-discovery mode.
  std::optional<int64_t> threshold;
};

struct AggregationAborted {
  // A report whose budget the request would have exceeded.
  ReportId report;
  std::string reason;
};

using AggregationResult = std::variant<SummaryReport, AggregationAborted>;

enum class NoiseMode {
  kDiscreteLaplace,
  // Exact sums. Reachable only from audit code paths.
  kDisabledForAudit,
};

class AggregationService {
 public:
  // `ledger` must outlive the service and may be shared between services.
  AggregationService(PrivacyBudgetLedger* ledger, ContributionBounds bounds,
                     NoiseMode noise = NoiseMode::kDiscreteLaplace);

  // Errors are reserved for malformed requests; a budget violation is an
  // AggregationAborted result and charges nothing.
  absl::StatusOr<AggregationResult> Aggregate(
      const AggregationRequest& request, Rng& rng) const;

  const ContributionBounds& bounds() const { return bounds_; }

 private:
  PrivacyBudgetLedger* ledger_;
  ContributionBounds bounds_;
  NoiseMode noise_;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_AGGREGATION_SERVICE_H_
