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

#include "sandbox_dp/aggregation_service.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <utility>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/str_cat.h"
#include "sandbox_dp/noise.h"

namespace sandbox_dp {

PrivacyBudgetLedger::PrivacyBudgetLedger(BudgetAmount eps_star,
                                         BudgetAmount delta_star)
    : eps_star_(eps_star), delta_star_(delta_star) {}

absl::StatusOr<std::unique_ptr<PrivacyBudgetLedger>>
PrivacyBudgetLedger::FromSnapshot(const LedgerSnapshot& snapshot) {
  auto ledger = std::make_unique<PrivacyBudgetLedger>(snapshot.eps_star,
                                                      snapshot.delta_star);
  absl::MutexLock lock(&ledger->mu_);
  for (const LedgerRecord& r : snapshot.records) {
    if (r.used.eps > snapshot.eps_star || r.used.delta > snapshot.delta_star) {
      return absl::FailedPreconditionError(
          absl::StrCat("ledger record ", r.id.ToHex(), " exceeds the caps"));
    }
    if (!ledger->used_.emplace(r.id, r.used).second) {
      return absl::FailedPreconditionError(
          absl::StrCat("duplicate ledger record ", r.id.ToHex()));
    }
  }
  return ledger;
}

absl::Status PrivacyBudgetLedger::TryCharge(absl::Span<const ReportId> ids,
                                            BudgetAmount eps,
                                            BudgetAmount delta,
                                            ReportId* culprit) {
  absl::MutexLock lock(&mu_);
  for (const ReportId& id : ids) {
    BudgetUsage current;
    if (auto it = used_.find(id); it != used_.end()) current = it->second;
    if (culprit != nullptr) *culprit = id;
    if (current.eps + eps > eps_star_) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "epsilon budget of report ", id.ToHex(), " would reach ",
          (current.eps + eps).ToDecimalString(), " > ",
          eps_star_.ToDecimalString()));
    }
    if (current.delta + delta > delta_star_) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "delta budget of report ", id.ToHex(), " would reach ",
          (current.delta + delta).ToDecimalString(), " > ",
          delta_star_.ToDecimalString()));
    }
  }
  absl::flat_hash_set<ReportId> charged;
  for (const ReportId& id : ids) {
    if (!charged.insert(id).second) continue;
    BudgetUsage& u = used_[id];
    u.eps += eps;
    u.delta += delta;
  }
  return absl::OkStatus();
}

BudgetUsage PrivacyBudgetLedger::Consumed(ReportId id) const {
  absl::MutexLock lock(&mu_);
  auto it = used_.find(id);
  return it == used_.end() ? BudgetUsage{} : it->second;
}

BudgetUsage PrivacyBudgetLedger::Remaining(ReportId id) const {
  const BudgetUsage used = Consumed(id);
  return BudgetUsage{eps_star_ - used.eps, delta_star_ - used.delta};
}

LedgerSnapshot PrivacyBudgetLedger::Snapshot() const {
  LedgerSnapshot snap{eps_star_, delta_star_, {}};
  {
    absl::MutexLock lock(&mu_);
    snap.records.reserve(used_.size());
    for (const auto& [id, usage] : used_) {
      snap.records.push_back(LedgerRecord{id, usage});
    }
  }
  std::sort(snap.records.begin(), snap.records.end(),
            [](const LedgerRecord& a, const LedgerRecord& b) {
              return a.id < b.id;
            });
  return snap;
}

AggregationService::AggregationService(PrivacyBudgetLedger* ledger,
                                       ContributionBounds bounds,
                                       NoiseMode noise)
    : ledger_(ledger), bounds_(bounds), noise_(noise) {}

absl::StatusOr<AggregationResult> AggregationService::Aggregate(
    const AggregationRequest& request, Rng& rng) const {
  if (!(request.eps > 0.0) || !std::isfinite(request.eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps must be positive and finite, got ", request.eps));
  }
  if (!(request.delta >= 0.0 && request.delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1], got ", request.delta));
  }
  if (absl::Status s = bounds_.Validate(); !s.ok()) return s;
  const bool discovery = std::holds_alternative<KeyDiscovery>(request.mode);
  if (discovery && request.delta == 0.0) {
    return absl::InvalidArgumentError("key discovery requires delta > 0");
  }

  // Null reports are ignored entirely. A repeated id is aggregated once.
  std::vector<ReportId> ids;
  std::vector<Contribution> contributions;
  {
    absl::flat_hash_set<ReportId> seen;
    for (const AggregatableReport& r : request.batch) {
      if (r.is_null() || !seen.insert(r.id).second) continue;
      if (r.payload->value < 0 || r.payload->value > bounds_.contribution_budget) {
        return absl::InvalidArgumentError(absl::StrCat(
            "report ", r.id.ToHex(), " has value ", r.payload->value,
            " outside [0, ", bounds_.contribution_budget, "]"));
      }
      ids.push_back(r.id);
      contributions.push_back(*r.payload);
    }
  }

  absl::StatusOr<BudgetAmount> eps = BudgetAmount::FromDouble(request.eps);
  if (!eps.ok()) return eps.status();
  BudgetAmount delta;
  if (discovery) {
    absl::StatusOr<BudgetAmount> d = BudgetAmount::FromDouble(request.delta);
    if (!d.ok()) return d.status();
    delta = *d;
  }

  std::optional<int64_t> tau;
  if (discovery) {
    absl::StatusOr<std::optional<int64_t>> t =
        ComputeTau(bounds_.contribution_budget, bounds_.sparsity_budget,
                   request.eps, request.delta);
    if (!t.ok()) return t.status();
    tau = *t;
  }
  absl::StatusOr<DLapParam> noise = DLapParam::Create(
      request.eps / static_cast<double>(bounds_.contribution_budget), tau);
  if (!noise.ok()) return noise.status();

  ReportId culprit;
  if (absl::Status charged = ledger_->TryCharge(ids, *eps, delta, &culprit);
      !charged.ok()) {
    if (!absl::IsResourceExhausted(charged)) return charged;
    return AggregationResult(
        AggregationAborted{culprit, std::string(charged.message())});
  }

  auto draw = [&]() -> int64_t {
    return noise_ == NoiseMode::kDisabledForAudit ? 0 : SampleDLap(*noise, rng);
  };

  SummaryReport out;
  if (const auto* listed = std::get_if<ListedKeys>(&request.mode)) {
    absl::flat_hash_map<Key, int64_t> sums;
    for (const Contribution& c : contributions) sums[c.key] += c.value;
    out.entries.reserve(listed->keys.size());
    for (const Key& k : listed->keys) {
      auto it = sums.find(k);
      const int64_t exact = it == sums.end() ? 0 : it->second;
      out.entries.push_back(SummaryEntry{k, exact + draw()});
    }
  } else {
    // Ordered so noise is drawn in a seed-stable key order.
    std::map<Key, int64_t> sums;
    for (const Contribution& c : contributions) sums[c.key] += c.value;
    out.threshold = tau;
    for (const auto& [k, exact] : sums) {
      const int64_t w = exact + draw();
      if (w > *tau) out.entries.push_back(SummaryEntry{k, w});
    }
  }
  return AggregationResult(std::move(out));
}

}  // namespace sandbox_dp
