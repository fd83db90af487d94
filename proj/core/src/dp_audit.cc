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

#include "sandbox_dp/dp_audit.h"

#include <cstdlib>

#include "sandbox_dp/noise.h"

namespace sandbox_dp {
namespace {

struct Axis {
  // Per-coordinate masses of P and Q over the axis range.
  std::vector<long double> p;
  std::vector<long double> q;
};

absl::Status CheckVectors(absl::Span<const int64_t> u,
                          absl::Span<const int64_t> v) {
  if (u.size() != v.size() || u.empty()) {
    return absl::InvalidArgumentError("u and v need the same positive length");
  }
  if (u.size() > kMaxAuditDimension) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "dimension ", u.size(), " exceeds ", kMaxAuditDimension));
  }
  return absl::OkStatus();
}

// Builds per-axis masses; `pmf(offset)` is the noise mass at an offset.
template <typename Pmf>
std::vector<Axis> BuildAxes(absl::Span<const int64_t> u,
                            absl::Span<const int64_t> v, int64_t reach,
                            const Pmf& pmf) {
  std::vector<Axis> axes(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    const int64_t lo = std::min(u[i], v[i]) - reach;
    const int64_t hi = std::max(u[i], v[i]) + reach;
    for (int64_t w = lo; w <= hi; ++w) {
      axes[i].p.push_back(pmf(w - u[i]));
      axes[i].q.push_back(pmf(w - v[i]));
    }
  }
  return axes;
}

struct BoxSums {
  CompensatedSum<long double> pq;  // sum max(P - e^eps Q, 0)
  CompensatedSum<long double> qp;
  CompensatedSum<long double> p_mass;
  CompensatedSum<long double> q_mass;
  long double max_log_ratio = 0.0L;
  bool track_ratio = false;
};

void WalkBox(const std::vector<Axis>& axes, size_t dim, long double p,
             long double q, long double scale, BoxSums& sums) {
  if (dim == axes.size()) {
    if (p - scale * q > 0.0L) sums.pq += p - scale * q;
    if (q - scale * p > 0.0L) sums.qp += q - scale * p;
    sums.p_mass += p;
    sums.q_mass += q;
    if (sums.track_ratio && p > 0.0L && q > 0.0L) {
      sums.max_log_ratio =
          std::max(sums.max_log_ratio, std::fabs(std::log(p / q)));
    }
    return;
  }
  const Axis& axis = axes[dim];
  for (size_t j = 0; j < axis.p.size(); ++j) {
    const long double np = p * axis.p[j];
    const long double nq = q * axis.q[j];
    if (np == 0.0L && nq == 0.0L) continue;
    WalkBox(axes, dim + 1, np, nq, scale, sums);
  }
}

}  // namespace

absl::StatusOr<TdlapAuditReport> AuditTruncatedDLap(const TdlapInstance& inst) {
  if (absl::Status s = CheckVectors(inst.u, inst.v); !s.ok()) return s;
  int64_t l1 = 0;
  int64_t l0 = 0;
  for (size_t i = 0; i < inst.u.size(); ++i) {
    const int64_t d = std::llabs(inst.u[i] - inst.v[i]);
    l1 += d;
    l0 += d != 0;
  }
  TdlapAuditReport report;
  report.l1_cap = inst.l1_cap > 0 ? inst.l1_cap : std::max<int64_t>(l1, 1);
  report.l0_cap = inst.l0_cap > 0 ? inst.l0_cap : std::max<int64_t>(l0, 1);
  if (l1 > report.l1_cap || l0 > report.l0_cap) {
    return absl::InvalidArgumentError(absl::StrCat(
        "u - v has l1 ", l1, " and l0 ", l0, "; caps are ", report.l1_cap,
        " and ", report.l0_cap));
  }
  if (report.l1_cap > kMaxAuditL1) {
    return absl::ResourceExhaustedError(
        absl::StrCat("l1 cap ", report.l1_cap, " exceeds ", kMaxAuditL1));
  }
  if (!(inst.delta > 0.0)) {
    return absl::InvalidArgumentError(
        "truncated audit needs delta > 0; use AuditUntruncatedDLap");
  }
  report.a = inst.eps / static_cast<double>(report.l1_cap);
  if (inst.tau_override.has_value()) {
    report.tau = *inst.tau_override;
  } else {
    absl::StatusOr<std::optional<int64_t>> tau =
        ComputeTau(report.l1_cap, report.l0_cap, inst.eps, inst.delta);
    if (!tau.ok()) return tau.status();
    report.tau = tau->value();
  }
  absl::StatusOr<DLapParam> param = DLapParam::Create(report.a, report.tau);
  if (!param.ok()) return param.status();

  long double points = 1.0L;
  for (size_t i = 0; i < inst.u.size(); ++i) {
    points *= static_cast<long double>(2 * report.tau + 1 +
                                       std::llabs(inst.u[i] - inst.v[i]));
  }
  if (points > static_cast<long double>(kMaxAuditPoints)) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "support box has ", static_cast<double>(points), " points; limit ",
        kMaxAuditPoints));
  }
  report.points = static_cast<int64_t>(points);

  std::vector<long double> table(2 * report.tau + 1);
  for (int64_t x = -report.tau; x <= report.tau; ++x) {
    table[x + report.tau] = DLapPmf(*param, x);
  }
  const int64_t tau = report.tau;
  std::vector<Axis> axes =
      BuildAxes(inst.u, inst.v, tau, [&](int64_t offset) -> long double {
        return std::llabs(offset) <= tau ? table[offset + tau] : 0.0L;
      });
  BoxSums sums;
  WalkBox(axes, 0, 1.0L, 1.0L, std::exp(static_cast<long double>(inst.eps)),
          sums);
  report.hockey_stick = std::max(sums.pq.value(), sums.qp.value());
  report.pass = report.hockey_stick <=
                static_cast<long double>(inst.delta) + kAuditSlack;
  return report;
}

absl::StatusOr<UntruncatedAuditReport> AuditUntruncatedDLap(
    absl::Span<const int64_t> u, absl::Span<const int64_t> v, double a,
    int64_t window) {
  if (absl::Status s = CheckVectors(u, v); !s.ok()) return s;
  if (window < 0) return absl::InvalidArgumentError("window must be >= 0");
  absl::StatusOr<DLapParam> param = DLapParam::Create(a, std::nullopt);
  if (!param.ok()) return param.status();
  int64_t l1 = 0;
  long double points = 1.0L;
  for (size_t i = 0; i < u.size(); ++i) {
    l1 += std::llabs(u[i] - v[i]);
    points *= static_cast<long double>(2 * window + 1 + std::llabs(u[i] - v[i]));
  }
  if (points > static_cast<long double>(kMaxAuditPoints)) {
    return absl::ResourceExhaustedError("window box too large");
  }
  UntruncatedAuditReport report;
  report.eps = a * static_cast<double>(l1);
  std::vector<Axis> axes = BuildAxes(
      u, v, window, [&](int64_t offset) { return DLapPmf(*param, offset); });
  BoxSums sums;
  sums.track_ratio = true;
  WalkBox(axes, 0, 1.0L, 1.0L, std::exp(static_cast<long double>(report.eps)),
          sums);
  report.max_log_ratio = sums.max_log_ratio;
  report.window_hockey_stick = std::max(sums.pq.value(), sums.qp.value());
  report.tail_mass =
      std::max(1.0L - sums.p_mass.value(), 1.0L - sums.q_mass.value());
  report.pass =
      report.max_log_ratio <=
          static_cast<long double>(report.eps) * (1.0L + kAuditSlack) +
              kAuditSlack &&
      report.window_hockey_stick <= kAuditSlack;
  return report;
}

RolloutAuditReport AuditRollout(const RolloutTrace& trace, double eps_cap,
                                double delta_cap) {
  RolloutAuditReport report;
  const RolloutAccount account = ComputeRollout(trace.turns, trace.bounds);
  for (const auto& [x, turns] : account.per_turn) {
    const RolloutSums total = account.Total(x);
    UnitRolloutResult r{x, total.eps, total.delta, false};
    r.pass = total.eps <= static_cast<long double>(eps_cap) + kAuditSlack &&
             total.delta <= static_cast<long double>(delta_cap) + kAuditSlack;
    if (!r.pass && report.pass) {
      report.pass = false;
      report.first_failure = x;
    }
    report.units.push_back(std::move(r));
  }
  return report;
}

RolloutAuditReport AuditRollout(const RolloutTrace& trace) {
  return AuditRollout(trace, trace.eps_star, trace.delta_star);
}

}  // namespace sandbox_dp
