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

#include "sandbox_dp/summary_mechanism.h"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "absl/container/flat_hash_map.h"
#include "absl/strings/str_cat.h"
#include "sandbox_dp/compensated_sum.h"
#include "sandbox_dp/noise.h"

namespace sandbox_dp {

std::string UnitId::ToString() const {
  if (dummy) return "<dummy>";
  if (window.has_value()) return absl::StrCat(name, "@", *window);
  return name;
}

bool IsBlank(DbFlavor flavor, const MsrRecord& record) {
  return flavor == DbFlavor::kAra ? record.x.dummy
                                  : !record.storage.has_value();
}

absl::Status MsrParams::Validate() const {
  if (absl::Status s = bounds.Validate(); !s.ok()) return s;
  if (!(eps_star >= 0.0) || !std::isfinite(eps_star)) {
    return absl::InvalidArgumentError("eps_star must be finite and >= 0");
  }
  if (!(delta_star >= 0.0 && delta_star <= 1.0)) {
    return absl::InvalidArgumentError("delta_star must lie in [0, 1]");
  }
  std::vector<Key> sorted = key_universe;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    return absl::InvalidArgumentError("key universe has duplicates");
  }
  return absl::OkStatus();
}

bool operator<(const MsrResponse& a, const MsrResponse& b) {
  if (a.aborted != b.aborted) return a.aborted < b.aborted;
  return std::lexicographical_compare(
      a.released.begin(), a.released.end(), b.released.begin(),
      b.released.end(), [](const SummaryEntry& l, const SummaryEntry& r) {
        return std::tie(l.key, l.value) < std::tie(r.key, r.value);
      });
}

absl::StatusOr<MsrMechanism> MsrMechanism::Create(MsrParams params) {
  if (absl::Status s = params.Validate(); !s.ok()) return s;
  absl::StatusOr<BudgetAmount> eps_star = BudgetAmount::FromDouble(
      params.eps_star, BudgetAmount::Rounding::kExact);
  if (!eps_star.ok()) return eps_star.status();
  absl::StatusOr<BudgetAmount> delta_star = BudgetAmount::FromDouble(
      params.delta_star, BudgetAmount::Rounding::kExact);
  if (!delta_star.ok()) return delta_star.status();
  MsrMechanism m(std::move(params));
  m.eps_star_ = *eps_star;
  m.delta_star_ = *delta_star;
  return m;
}

absl::Status MsrMechanism::ValidateQuery(const Query& q) {
  if (!(q.eps > 0.0) || !std::isfinite(q.eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat("query eps must be positive and finite, got ", q.eps));
  }
  if (!(q.delta >= 0.0 && q.delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("query delta must lie in [0, 1], got ", q.delta));
  }
  if (!q.f) return absl::InvalidArgumentError("query has no f");
  return absl::OkStatus();
}

UnitUsage MsrMechanism::usage(const UnitId& x) const {
  auto it = usage_.find(x);
  return it == usage_.end() ? UnitUsage{} : it->second;
}

BudgetUsage MsrMechanism::budget(ReportId y) const {
  auto it = budgets_.find(y);
  return it == budgets_.end() ? BudgetUsage{} : it->second;
}

std::optional<std::vector<int64_t>> MsrMechanism::Admit(const Database& db,
                                                        const Query& q) {
  MsrTurnTrace turn;
  turn.eps = q.eps;
  turn.delta = q.delta;
  turn.reports.assign(q.reports.begin(), q.reports.end());

  // Phase 1: contribution bounding per unit.
  for (const MsrRecord& record : db.records) {
    if (reports_.contains(record.y)) continue;
    const Contribution c =
        IsBlank(db.flavor, record) ? Contribution{Key(), 0} : q.f(record);
    if (c.value < 0) continue;
    UnitUsage& u = usage_[record.x];
    if (!u.Admits(c.value, params_.bounds)) continue;
    u.contributions += 1;
    u.total_value += c.value;
    reports_.emplace(record.y, Stored{record.x, c});
    turn.admitted.push_back(AdmittedReport{record.x, record.y, c});
  }

  // Phase 2: budget bounding per report in Y. Amounts round up so a charge
  // never understates the request.
  const BudgetAmount eps =
      BudgetAmount::FromDouble(q.eps).value_or(eps_star_ + BudgetAmount::FromUnits(1));
  const BudgetAmount delta =
      BudgetAmount::FromDouble(q.delta).value_or(delta_star_ + BudgetAmount::FromUnits(1));
  for (const ReportId& y : q.reports) {
    const BudgetUsage used = budget(y);
    if (used.eps + eps > eps_star_ || used.delta + delta > delta_star_) {
      turn.aborted = true;
      trace_.push_back(std::move(turn));
      return std::nullopt;
    }
  }
  for (const ReportId& y : q.reports) {
    BudgetUsage& b = budgets_[y];
    b.eps += eps;
    b.delta += delta;
  }
  trace_.push_back(std::move(turn));

  absl::flat_hash_map<Key, size_t> index;
  for (size_t i = 0; i < params_.key_universe.size(); ++i) {
    index.emplace(params_.key_universe[i], i);
  }
  std::vector<int64_t> sums(params_.key_universe.size(), 0);
  for (const ReportId& y : q.reports) {
    auto it = reports_.find(y);
    if (it == reports_.end()) continue;
    auto k = index.find(it->second.contribution.key);
    if (k != index.end()) sums[k->second] += it->second.contribution.value;
  }
  return sums;
}

namespace {

absl::StatusOr<std::optional<int64_t>> Threshold(const MsrParams& params,
                                                 const MsrQuery& q) {
  return ComputeTau(params.bounds.contribution_budget,
                    params.bounds.sparsity_budget, q.eps, q.delta);
}

}  // namespace

MsrResponse MsrMechanism::Step(const Database& db, const Query& q, Rng& rng) {
  if (!ValidateQuery(q).ok()) return MsrResponse{true, {}};
  absl::StatusOr<std::optional<int64_t>> tau = Threshold(params_, q);
  if (!tau.ok()) return MsrResponse{true, {}};
  std::optional<std::vector<int64_t>> sums = Admit(db, q);
  if (!sums.has_value()) return MsrResponse{true, {}};

  const DLapParam noise{
      q.eps / static_cast<double>(params_.bounds.contribution_budget), *tau};
  MsrResponse out;
  for (size_t i = 0; i < sums->size(); ++i) {
    int64_t c = (*sums)[i];
    if (params_.noise == NoiseMode::kDiscreteLaplace) c += SampleDLap(noise, rng);
    if (!tau->has_value() || c > **tau) {
      out.released.push_back(SummaryEntry{params_.key_universe[i], c});
    }
  }
  return out;
}

absl::StatusOr<std::vector<Branch<MsrMechanism>>> MsrMechanism::StepOutcomes(
    const Database& db, const Query& q) const {
  std::vector<Branch<MsrMechanism>> out;
  MsrMechanism next = *this;
  absl::StatusOr<std::optional<int64_t>> tau = Threshold(params_, q);
  if (!ValidateQuery(q).ok() || !tau.ok()) {
    out.push_back({1.0L, MsrResponse{true, {}}, std::move(next)});
    return out;
  }
  std::optional<std::vector<int64_t>> sums = next.Admit(db, q);
  if (!sums.has_value()) {
    out.push_back({1.0L, MsrResponse{true, {}}, std::move(next)});
    return out;
  }
  const bool noisy = params_.noise == NoiseMode::kDiscreteLaplace;
  if (noisy && !tau->has_value()) {
    return absl::FailedPreconditionError(
        "exact enumeration needs truncated noise (delta > 0)");
  }

  // Per key: (probability, released value or nullopt).
  using Option = std::pair<long double, std::optional<int64_t>>;
  std::vector<std::vector<Option>> per_key;
  long double count = 1.0L;
  for (int64_t s : *sums) {
    std::vector<Option> options;
    if (!noisy) {
      if (!tau->has_value() || s > **tau) {
        options.push_back({1.0L, s});
      } else {
        options.push_back({1.0L, std::nullopt});
      }
    } else {
      const int64_t t = **tau;
      const DLapParam p{
          q.eps / static_cast<double>(params_.bounds.contribution_budget), t};
      // c = s + xi is released iff xi > t - s.
      const long double absent = DLapCdf(p, t - s);
      if (absent > 0.0L) options.push_back({absent, std::nullopt});
      for (int64_t xi = std::max(-t, t - s + 1); xi <= t; ++xi) {
        options.push_back({DLapPmf(p, xi), s + xi});
      }
    }
    count *= static_cast<long double>(options.size());
    if (count > static_cast<long double>(max_outcomes_)) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "step has more than ", max_outcomes_, " outcomes"));
    }
    per_key.push_back(std::move(options));
  }

  std::vector<size_t> digit(per_key.size(), 0);
  while (true) {
    long double prob = 1.0L;
    MsrResponse r;
    for (size_t i = 0; i < per_key.size(); ++i) {
      const Option& o = per_key[i][digit[i]];
      prob *= o.first;
      if (o.second.has_value()) {
        r.released.push_back(SummaryEntry{params_.key_universe[i], *o.second});
      }
    }
    out.push_back({prob, std::move(r), next});
    size_t i = 0;
    for (; i < per_key.size(); ++i) {
      if (++digit[i] < per_key[i].size()) break;
      digit[i] = 0;
    }
    if (i == per_key.size()) break;
  }
  return out;
}

MeasurementDatabase RemoveUnit(const MeasurementDatabase& db,
                               const RemovalTarget& target) {
  MeasurementDatabase out = db;
  for (MsrRecord& r : out.records) {
    if (r.x.dummy) continue;
    if (const auto* s = std::get_if<RemoveSource>(&target)) {
      if (db.flavor == DbFlavor::kAra && !r.x.window.has_value() &&
          r.x.name == s->src_id) {
        r.x = UnitId::Dummy();
      }
    } else if (const auto* w = std::get_if<RemoveDeviceWindow>(&target)) {
      if (db.flavor == DbFlavor::kPaa && r.x.name == w->device &&
          r.x.window == w->window) {
        r.storage.reset();
      }
    } else if (const auto* a = std::get_if<RemoveDeviceAfter>(&target)) {
      if (db.flavor == DbFlavor::kPaa && r.x.name == a->device &&
          r.x.window.has_value() && *r.x.window > a->after_window) {
        r.storage.reset();
      }
    }
  }
  return out;
}

RolloutSums RolloutAccount::Total(const UnitId& x) const {
  auto it = per_turn.find(x);
  if (it == per_turn.end()) return RolloutSums{};
  CompensatedSum<long double> eps;
  CompensatedSum<long double> delta;
  for (const RolloutSums& s : it->second) {
    eps += s.eps;
    delta += s.delta;
  }
  return RolloutSums{eps.value(), delta.value()};
}

RolloutAccount ComputeRollout(const std::vector<MsrTurnTrace>& trace,
                              const ContributionBounds& bounds) {
  RolloutAccount account;
  // Reports generated for each unit so far: y -> v.
  std::map<UnitId, std::map<ReportId, int64_t>> generated;
  for (size_t t = 0; t < trace.size(); ++t) {
    const MsrTurnTrace& turn = trace[t];
    for (const AdmittedReport& a : turn.admitted) {
      if (a.x.dummy) continue;
      generated[a.x][a.y] = a.contribution.value;
      // Units first seen now get zero entries for earlier turns.
      account.per_turn[a.x].resize(t);
    }
    for (auto& [x, reports] : generated) {
      RolloutSums step;
      if (!turn.aborted) {
        int64_t value = 0;
        int64_t count = 0;
        for (const ReportId& y : turn.reports) {
          auto it = reports.find(y);
          if (it == reports.end()) continue;
          value += it->second;
          ++count;
        }
        step.eps = static_cast<long double>(turn.eps) /
                   static_cast<long double>(bounds.contribution_budget) *
                   static_cast<long double>(value);
        step.delta = static_cast<long double>(turn.delta) /
                     static_cast<long double>(bounds.sparsity_budget) *
                     static_cast<long double>(count);
      }
      account.per_turn[x].push_back(step);
    }
  }
  return account;
}

absl::StatusOr<PrivacyPair> GroupPrivacy(double eps, double delta, int64_t k) {
  if (k < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("group size must be >= 1, got ", k));
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError("eps must be positive and finite");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError("delta must lie in [0, 1]");
  }
  if (k == 1) return PrivacyPair{eps, delta};
  const double k_eps = static_cast<double>(k) * eps;
  const double factor = (std::exp(k_eps) - 1.0) / (std::exp(eps) - 1.0);
  return PrivacyPair{k_eps, delta == 0.0 ? 0.0 : delta * factor};
}

absl::StatusOr<PrivacyPair> GradualExpiration(double eps, double delta,
                                              int64_t t1, int64_t t2) {
  if (t2 <= t1) {
    return absl::InvalidArgumentError("gradual expiration needs t1 < t2");
  }
  return GroupPrivacy(eps, delta, t2 - t1);
}

}  // namespace sandbox_dp
