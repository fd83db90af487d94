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

// Interactive mechanisms, adversaries and privacy filters.
//
// A mechanism is a copyable value holding its own state. Step() consumes one
// (database, query) pair and returns a response, drawing randomness from the
// supplied stream. Mechanisms that also provide StepOutcomes() expose the
// exact response distribution of one step together with the successor state
// for each response, which is what the exact auditor enumerates.
//
// An adversary is a deterministic function from the response history to the
// next (database, query) or nullopt to halt.

#ifndef SANDBOX_DP_INTERACTIVE_H_
#define SANDBOX_DP_INTERACTIVE_H_

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/types/span.h"
#include "sandbox_dp/random.h"

namespace sandbox_dp {

template <typename M>
concept InteractiveMechanism =
    std::copyable<M> && requires(M m, const typename M::Database& db,
                                 const typename M::Query& q, Rng& rng) {
      { m.Step(db, q, rng) } -> std::same_as<typename M::Response>;
    };

// One branch of a step's exact distribution.
template <typename M>
struct Branch {
  long double probability;
  typename M::Response response;
  M next;
};

template <typename M>
concept EnumerableMechanism =
    InteractiveMechanism<M> && requires(const M m, const typename M::Database& db,
                                        const typename M::Query& q) {
      {
        m.StepOutcomes(db, q)
      } -> std::same_as<absl::StatusOr<std::vector<Branch<M>>>>;
    };

template <typename M>
struct Turn {
  typename M::Database database;
  typename M::Query query;
};

template <typename M>
using Adversary = std::function<std::optional<Turn<M>>(
    absl::Span<const typename M::Response>)>;

// A randomized adversary: a finite distribution over deterministic ones.
template <typename M>
struct AdversaryMixture {
  std::vector<std::pair<double, Adversary<M>>> components;
};

struct TranscriptOptions {
  int64_t max_steps = 100000;
  bool record_databases = false;
};

template <typename M>
struct TranscriptRecord {
  std::vector<typename M::Response> responses;
  // Filled only with TranscriptOptions::record_databases.
  std::vector<typename M::Database> databases;
};

// Plays `adversary` against `mechanism` until the adversary halts. Fails with
// ResourceExhausted if it has not halted after options.max_steps turns.
template <InteractiveMechanism M>
absl::StatusOr<TranscriptRecord<M>> RunTranscript(
    M mechanism, const Adversary<M>& adversary, Rng& rng,
    const TranscriptOptions& options = {}) {
  TranscriptRecord<M> record;
  for (int64_t step = 0;; ++step) {
    std::optional<Turn<M>> turn = adversary(
        absl::MakeConstSpan(record.responses));
    if (!turn.has_value()) return record;
    if (step >= options.max_steps) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "adversary did not halt within ", options.max_steps, " steps"));
    }
    record.responses.push_back(mechanism.Step(turn->database, turn->query, rng));
    if (options.record_databases) {
      record.databases.push_back(std::move(turn->database));
    }
  }
}

// Samples one component by weight, then plays it.
template <InteractiveMechanism M>
absl::StatusOr<TranscriptRecord<M>> RunTranscript(
    M mechanism, const AdversaryMixture<M>& mixture, Rng& rng,
    const TranscriptOptions& options = {}) {
  if (mixture.components.empty()) {
    return absl::InvalidArgumentError("empty adversary mixture");
  }
  double total = 0.0;
  for (const auto& [w, unused] : mixture.components) {
    if (!(w >= 0.0)) return absl::InvalidArgumentError("negative weight");
    total += w;
  }
  if (!(total > 0.0)) return absl::InvalidArgumentError("zero total weight");
  const double u = rng.UniformDouble() * total;
  double acc = 0.0;
  size_t pick = mixture.components.size() - 1;
  for (size_t i = 0; i < mixture.components.size(); ++i) {
    acc += mixture.components[i].first;
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return RunTranscript(std::move(mechanism), mixture.components[pick].second,
                       rng, options);
}

// True iff every recorded database equals the first.
template <typename Db>
bool IsStable(absl::Span<const Db> databases) {
  for (const Db& db : databases) {
    if (!(db == databases.front())) return false;
  }
  return true;
}

// Wraps `adversary` so each database it issues passes through `transform`.
// Used to play the same adversary against neighbouring databases.
template <typename M>
Adversary<M> TransformDatabases(
    Adversary<M> adversary,
    std::function<typename M::Database(const typename M::Database&)>
        transform) {
  return [adversary = std::move(adversary), transform = std::move(transform)](
             absl::Span<const typename M::Response> history)
             -> std::optional<Turn<M>> {
    std::optional<Turn<M>> turn = adversary(history);
    if (turn.has_value()) turn->database = transform(turn->database);
    return turn;
  };
}

// (eps, delta) for the approximate-DP filter; (rho, delta) for the zCDP one.
struct PrivacyParams {
  double first = 0.0;
  double delta = 0.0;

  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;
};

enum class FilterKind { kEpsDelta, kRhoDelta };

// Accepts iff the componentwise sums over history + theta stay within caps.
class PrivacyFilter {
 public:
  PrivacyFilter(FilterKind kind, PrivacyParams caps) : kind_(kind), caps_(caps) {}

  bool Accepts(absl::Span<const PrivacyParams> history,
               PrivacyParams theta) const;

  FilterKind kind() const { return kind_; }
  const PrivacyParams& caps() const { return caps_; }

 private:
  FilterKind kind_;
  PrivacyParams caps_;
};

bool FilterEpsDelta(absl::Span<const PrivacyParams> history,
                    PrivacyParams theta, PrivacyParams caps);
bool FilterRhoDelta(absl::Span<const PrivacyParams> history,
                    PrivacyParams theta, PrivacyParams caps);

// One-shot query with its declared privacy parameters.
template <typename Db, typename R>
struct UniversalQuery {
  PrivacyParams theta;
  std::function<R(const Db&, Rng&)> sample;
  // Exact output distribution; needed only for enumeration.
  std::function<std::vector<std::pair<long double, R>>(const Db&)> outcomes;
};

// Runs queries while the filter accepts their declared parameters. A rejected
// query answers nullopt and records zero consumption.
template <typename Db, typename R>
class UniversalFilteredMechanism {
 public:
  using Database = Db;
  using Query = UniversalQuery<Db, R>;
  using Response = std::optional<R>;

  explicit UniversalFilteredMechanism(PrivacyFilter filter)
      : filter_(std::move(filter)) {}

  Response Step(const Db& db, const Query& q, Rng& rng) {
    if (!filter_.Accepts(history_, q.theta)) {
      history_.push_back(PrivacyParams{});
      return std::nullopt;
    }
    history_.push_back(q.theta);
    return q.sample(db, rng);
  }

  absl::StatusOr<std::vector<Branch<UniversalFilteredMechanism>>> StepOutcomes(
      const Db& db, const Query& q) const {
    UniversalFilteredMechanism next = *this;
    if (!filter_.Accepts(history_, q.theta)) {
      next.history_.push_back(PrivacyParams{});
      std::vector<Branch<UniversalFilteredMechanism>> out;
      out.push_back({1.0L, std::nullopt, std::move(next)});
      return out;
    }
    if (!q.outcomes) {
      return absl::FailedPreconditionError("query has no exact distribution");
    }
    next.history_.push_back(q.theta);
    std::vector<Branch<UniversalFilteredMechanism>> out;
    for (auto& [p, r] : q.outcomes(db)) out.push_back({p, r, next});
    return out;
  }

  const std::vector<PrivacyParams>& history() const { return history_; }
  const PrivacyFilter& filter() const { return filter_; }

 private:
  PrivacyFilter filter_;
  std::vector<PrivacyParams> history_;
};

// Query against a set of units with a declared per-unit parameter map. Units
// absent from `p` are charged zero.
template <typename Unit, typename R>
struct IndividualQuery {
  std::map<Unit, PrivacyParams> p;
  std::function<R(const std::set<Unit>&, Rng&)> sample;
  std::function<std::vector<std::pair<long double, R>>(const std::set<Unit>&)>
      outcomes;
};

// Per-unit filtering: the query runs on the units whose own histories still
// admit their declared parameters. Excluded units record zero.
template <typename Unit, typename R>
class IndividualFilteredMechanism {
 public:
  using Database = std::set<Unit>;
  using Query = IndividualQuery<Unit, R>;
  using Response = R;

  explicit IndividualFilteredMechanism(PrivacyFilter filter)
      : filter_(std::move(filter)) {}

  Response Step(const Database& db, const Query& q, Rng& rng) {
    return q.sample(Advance(db, q), rng);
  }

  absl::StatusOr<std::vector<Branch<IndividualFilteredMechanism>>>
  StepOutcomes(const Database& db, const Query& q) const {
    if (!q.outcomes) {
      return absl::FailedPreconditionError("query has no exact distribution");
    }
    IndividualFilteredMechanism next = *this;
    const Database masked = next.Advance(db, q);
    std::vector<Branch<IndividualFilteredMechanism>> out;
    for (auto& [p, r] : q.outcomes(masked)) out.push_back({p, r, next});
    return out;
  }

  // Masked database for `q` under the current state, without advancing.
  Database Masked(const Database& db, const Query& q) const {
    Database out;
    for (const Unit& x : db) {
      if (Admits(x, q)) out.insert(x);
    }
    return out;
  }

  // Per-step consumption of `x`, zero-padded to the number of steps taken.
  std::vector<PrivacyParams> history(const Unit& x) const {
    std::vector<PrivacyParams> out(steps_);
    if (auto it = histories_.find(x); it != histories_.end()) {
      for (const auto& [step, theta] : it->second) out[step] = theta;
    }
    return out;
  }

  int64_t steps() const { return steps_; }

 private:
  PrivacyParams Declared(const Unit& x, const Query& q) const {
    auto it = q.p.find(x);
    return it == q.p.end() ? PrivacyParams{} : it->second;
  }

  bool Admits(const Unit& x, const Query& q) const {
    return filter_.Accepts(history(x), Declared(x, q));
  }

  Database Advance(const Database& db, const Query& q) {
    Database masked = Masked(db, q);
    // Every unit with a declared parameter is charged if its filter accepts,
    // whether or not it is in the database.
    for (const auto& [x, theta] : q.p) {
      if (Admits(x, q)) histories_[x].emplace_back(steps_, theta);
    }
    ++steps_;
    return masked;
  }

  PrivacyFilter filter_;
  // Sparse: (step, theta) for accepted non-zero declarations.
  std::map<Unit, std::vector<std::pair<int64_t, PrivacyParams>>> histories_;
  int64_t steps_ = 0;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_INTERACTIVE_H_
