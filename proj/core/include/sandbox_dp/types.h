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

#ifndef SANDBOX_DP_TYPES_H_
#define SANDBOX_DP_TYPES_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>

#include "absl/numeric/int128.h"
#include "absl/status/statusor.h"

namespace sandbox_dp {

// Logical time. One tick is one second of simulated time.
using Tick = int64_t;

inline constexpr Tick kTicksPerMinute = 60;
inline constexpr Tick kTicksPerDay = 24 * 60 * 60;

// Contribution budget default, 2^16.
inline constexpr int64_t kDefaultContributionBudget = int64_t{1} << 16;
// Default length of a shared-storage time window (10 minutes).
inline constexpr Tick kDefaultPaaWindowTicks = 10 * kTicksPerMinute;

// A 128-bit value with a tag that keeps keys and report ids from mixing.
// Serializes as 32 lowercase hex digits.
template <typename Tag>
class Id128 {
 public:
  constexpr Id128() = default;
  constexpr explicit Id128(absl::uint128 bits) : bits_(bits) {}
  static constexpr Id128 FromParts(uint64_t high, uint64_t low) {
    return Id128(absl::MakeUint128(high, low));
  }

  constexpr absl::uint128 bits() const { return bits_; }

  std::string ToHex() const;
  static absl::StatusOr<Id128> FromHex(std::string_view hex);

  friend constexpr bool operator==(Id128 a, Id128 b) {
    return a.bits_ == b.bits_;
  }
  friend constexpr bool operator<(Id128 a, Id128 b) {
    return a.bits_ < b.bits_;
  }
  friend constexpr bool operator!=(Id128 a, Id128 b) { return !(a == b); }
  friend constexpr bool operator>(Id128 a, Id128 b) { return b < a; }
  friend constexpr bool operator<=(Id128 a, Id128 b) { return !(b < a); }
  friend constexpr bool operator>=(Id128 a, Id128 b) { return !(a < b); }

  template <typename H>
  friend H AbslHashValue(H h, Id128 id) {
    return H::combine(std::move(h), absl::Uint128High64(id.bits_),
                      absl::Uint128Low64(id.bits_));
  }

  friend std::ostream& operator<<(std::ostream& os, Id128 id) {
    return os << id.ToHex();
  }

 private:
  absl::uint128 bits_ = 0;
};

struct KeyTag {};
struct ReportIdTag {};

// Aggregation key, an element of {0,1}^128.
using Key = Id128<KeyTag>;
// Per-report identifier. Drawn from the run's seeded stream.
using ReportId = Id128<ReportIdTag>;

// Non-null payload of an aggregatable report.
struct Contribution {
  Key key;
  int64_t value = 0;

  friend bool operator==(const Contribution&, const Contribution&) = default;
};

// (r, k, v) or the null report (r, bottom, bottom).
struct AggregatableReport {
  ReportId id;
  std::optional<Contribution> payload;

  bool is_null() const { return !payload.has_value(); }

  static AggregatableReport Null(ReportId id) { return {id, std::nullopt}; }

  friend bool operator==(const AggregatableReport&,
                         const AggregatableReport&) = default;
};

using FilterSet = std::set<std::string>;

struct SourceRegistration {
  std::string src_id;
  std::string dest;
  Tick expiry = 0;
  FilterSet filters;
  Key key;
  Tick registered_at = 0;
  // Registration counter; strictly increasing per client.
  uint64_t seq = 0;
};

struct TriggerRegistration {
  std::string dest;
  std::string trig_id;
  FilterSet filters;
  Key key;
  int64_t value = 0;
  Tick time = 0;
};

// Bitwise OR of the source-side and trigger-side key pieces.
inline Key CombineKeys(Key source_key, Key trigger_key) {
  return Key(source_key.bits() | trigger_key.bits());
}

// True iff the two filter sets intersect.
bool FiltersMatch(const FilterSet& source_filters,
                  const FilterSet& trigger_filters);

// True iff registered_at <= now <= expiry. The expiry tick is inclusive.
constexpr bool SourceActive(const SourceRegistration& source, Tick now) {
  return source.registered_at <= now && now <= source.expiry;
}

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_TYPES_H_
