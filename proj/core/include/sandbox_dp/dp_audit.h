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

// Exact privacy audits on small instances. Everything here enumerates; no
// sampling. Probabilities are long double and sums are compensated.

#ifndef SANDBOX_DP_DP_AUDIT_H_
#define SANDBOX_DP_DP_AUDIT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/types/span.h"
#include "sandbox_dp/compensated_sum.h"
#include "sandbox_dp/interactive.h"
#include "sandbox_dp/rollout_trace.h"
#include "sandbox_dp/summary_mechanism.h"

namespace sandbox_dp {

// Slack applied to every hockey-stick and cap comparison.
inline constexpr long double kAuditSlack = 1e-12L;

template <typename Outcome>
using FiniteDistribution = std::map<Outcome, long double>;

template <typename Outcome>
long double TotalMass(const FiniteDistribution<Outcome>& p) {
  CompensatedSum<long double> s;
  for (const auto& [w, m] : p) s += m;
  return s.value();
}

// sum_w max(P(w) - e^eps Q(w), 0).
template <typename Outcome>
long double HockeyStickOneWay(const FiniteDistribution<Outcome>& p,
                              const FiniteDistribution<Outcome>& q,
                              double eps) {
  const long double scale = std::exp(static_cast<long double>(eps));
  CompensatedSum<long double> s;
  for (const auto& [w, pw] : p) {
    auto it = q.find(w);
    const long double qw = it == q.end() ? 0.0L : it->second;
    const long double d = pw - scale * qw;
    if (d > 0.0L) s += d;
  }
  return s.value();
}

// Larger of the two directions. P and Q are (eps, delta)-indistinguishable
// iff this is <= delta.
template <typename Outcome>
long double HockeyStickDelta(const FiniteDistribution<Outcome>& p,
                             const FiniteDistribution<Outcome>& q,
                             double eps) {
  return std::max(HockeyStickOneWay(p, q, eps), HockeyStickOneWay(q, p, eps));
}

template <typename Outcome>
long double TotalVariation(const FiniteDistribution<Outcome>& p,
                           const FiniteDistribution<Outcome>& q) {
  CompensatedSum<long double> s;
  for (const auto& [w, pw] : p) {
    auto it = q.find(w);
    s += std::fabs(pw - (it == q.end() ? 0.0L : it->second));
  }
  for (const auto& [w, qw] : q) {
    if (!p.contains(w)) s += qw;
  }
  return s.value() / 2.0L;
}

// sum_i w_i P_i with weights normalized to 1.
template <typename Outcome>
FiniteDistribution<Outcome> Mixture(
    absl::Span<const std::pair<long double, FiniteDistribution<Outcome>>>
        components) {
  long double total = 0.0L;
  for (const auto& [w, unused] : components) total += w;
  FiniteDistribution<Outcome> out;
  for (const auto& [w, dist] : components) {
    for (const auto& [o, m] : dist) out[o] += w / total * m;
  }
  return out;
}

template <typename M>
using Transcript = std::vector<typename M::Response>;

struct ExactOptions {
  // Bound on distinct leaves visited.
  int64_t max_outcomes = 1000000;
  int64_t max_steps = 1000;
};

namespace audit_internal {

template <EnumerableMechanism M>
absl::Status Walk(const M& mechanism, const Adversary<M>& adversary,
                  const ExactOptions& options, long double probability,
                  Transcript<M>& history, int64_t& leaves,
                  FiniteDistribution<Transcript<M>>& out) {
  std::optional<Turn<M>> turn = adversary(absl::MakeConstSpan(history));
  if (!turn.has_value()) {
    if (++leaves > options.max_outcomes) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "transcript space exceeds ", options.max_outcomes, " outcomes"));
    }
    out[history] += probability;
    return absl::OkStatus();
  }
  if (static_cast<int64_t>(history.size()) >= options.max_steps) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "adversary did not halt within ", options.max_steps, " steps"));
  }
  absl::StatusOr<std::vector<Branch<M>>> branches =
      mechanism.StepOutcomes(turn->database, turn->query);
  if (!branches.ok()) return branches.status();
  for (Branch<M>& b : *branches) {
    if (!(b.probability > 0.0L)) continue;
    history.push_back(std::move(b.response));
    absl::Status s = Walk(b.next, adversary, options,
                          probability * b.probability, history, leaves, out);
    history.pop_back();
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace audit_internal

// Exact distribution of the full response transcript of `adversary` played
// against `mechanism`.
template <EnumerableMechanism M>
absl::StatusOr<FiniteDistribution<Transcript<M>>> ExactTranscriptDistribution(
    const M& mechanism, const Adversary<M>& adversary,
    const ExactOptions& options = {}) {
  FiniteDistribution<Transcript<M>> out;
  Transcript<M> history;
  int64_t leaves = 0;
  absl::Status s = audit_internal::Walk(mechanism, adversary, options, 1.0L,
                                        history, leaves, out);
  if (!s.ok()) return s;
  return out;
}

template <EnumerableMechanism M>
absl::StatusOr<FiniteDistribution<Transcript<M>>> ExactTranscriptDistribution(
    const M& mechanism, const AdversaryMixture<M>& mixture,
    const ExactOptions& options = {}) {
  std::vector<std::pair<long double, FiniteDistribution<Transcript<M>>>> parts;
  for (const auto& [w, adversary] : mixture.components) {
    if (!(w >= 0.0)) return absl::InvalidArgumentError("negative weight");
    absl::StatusOr<FiniteDistribution<Transcript<M>>> d =
        ExactTranscriptDistribution(mechanism, adversary, options);
    if (!d.ok()) return d.status();
    parts.emplace_back(static_cast<long double>(w), *std::move(d));
  }
  if (parts.empty()) return absl::InvalidArgumentError("empty mixture");
  return Mixture<Transcript<M>>(parts);
}

// u + xi versus v + xi with xi i.i.d. truncated discrete Laplace per
// coordinate. The caps default to ||u - v||_1 and ||u - v||_0; the scale is
// eps / l1_cap and tau comes from ComputeTau(l1_cap, l0_cap, eps, delta).
struct TdlapInstance {
  std::vector<int64_t> u;
  std::vector<int64_t> v;
  int64_t l1_cap = 0;
  int64_t l0_cap = 0;
  double eps = 1.0;
  double delta = 0.01;
  std::optional<int64_t> tau_override;
};

struct TdlapAuditReport {
  int64_t l1_cap = 0;
  int64_t l0_cap = 0;
  double a = 0.0;
  int64_t tau = 0;
  int64_t points = 0;
  long double hockey_stick = 0.0L;
  bool pass = false;
};

inline constexpr int kMaxAuditDimension = 4;
inline constexpr int64_t kMaxAuditL1 = 8;
inline constexpr int64_t kMaxAuditPoints = 50000000;

// Enumerates the whole support box. Fails on instances past the desk-scale
// guards.
absl::StatusOr<TdlapAuditReport> AuditTruncatedDLap(const TdlapInstance& inst);

struct UntruncatedAuditReport {
  double eps = 0.0;  // a * ||u - v||_1
  long double max_log_ratio = 0.0L;
  long double window_hockey_stick = 0.0L;
  // Mass of either distribution outside the window.
  long double tail_mass = 0.0L;
  bool pass = false;
};

// Untruncated noise with scale a: checks |ln P(w)/Q(w)| <= a ||u - v||_1 on
// the box widened by `window` around u and v, and hockey-stick 0 there.
absl::StatusOr<UntruncatedAuditReport> AuditUntruncatedDLap(
    absl::Span<const int64_t> u, absl::Span<const int64_t> v, double a,
    int64_t window);

struct UnitRolloutResult {
  UnitId x;
  long double eps = 0.0L;
  long double delta = 0.0L;
  bool pass = false;
};

struct RolloutAuditReport {
  std::vector<UnitRolloutResult> units;
  bool pass = true;
  std::optional<UnitId> first_failure;
};

// Replays the per-unit rollout and compares totals against the caps.
RolloutAuditReport AuditRollout(const RolloutTrace& trace, double eps_cap,
                                double delta_cap);
// Caps from the trace itself.
RolloutAuditReport AuditRollout(const RolloutTrace& trace);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_DP_AUDIT_H_
