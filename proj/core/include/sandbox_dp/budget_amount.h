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

#ifndef SANDBOX_DP_BUDGET_AMOUNT_H_
#define SANDBOX_DP_BUDGET_AMOUNT_H_

#include <string>
#include <string_view>

#include "absl/numeric/int128.h"
#include "absl/status/statusor.h"

namespace sandbox_dp {

// Exact decimal privacy-budget quantity with 18 fractional digits.
//
// Ledger sums and cap comparisons are done on these, so 0.1 + 0.2 == 0.3 and
// the decimal strings written to the ledger file reload to the same value.
class BudgetAmount {
 public:
  static constexpr int kFractionDigits = 18;

  enum class Rounding {
    // Reject inputs with more than kFractionDigits significant decimals.
    kExact,
    // Round such inputs up. Used for charges, where rounding down could let a
    // request slip under a cap.
    kUp,
  };

  constexpr BudgetAmount() = default;

  static constexpr BudgetAmount FromUnits(absl::int128 units) {
    BudgetAmount b;
    b.units_ = units;
    return b;
  }
  static BudgetAmount FromInteger(int64_t whole);

  // Accepts "12", "0.25", ".5", "1e-05", "2.5E3". No sign.
  static absl::StatusOr<BudgetAmount> FromDecimalString(
      std::string_view text, Rounding rounding = Rounding::kExact);
  // Converts via the shortest round-trip decimal representation of `value`,
  // so 0.1 becomes exactly 1/10.
  static absl::StatusOr<BudgetAmount> FromDouble(
      double value, Rounding rounding = Rounding::kUp);

  // Canonical form: no exponent, no trailing fractional zeros.
  std::string ToDecimalString() const;
  double ToDouble() const;
  absl::int128 units() const { return units_; }
  bool is_zero() const { return units_ == 0; }

  BudgetAmount& operator+=(BudgetAmount other) {
    units_ += other.units_;
    return *this;
  }
  BudgetAmount& operator-=(BudgetAmount other) {
    units_ -= other.units_;
    return *this;
  }
  friend BudgetAmount operator+(BudgetAmount a, BudgetAmount b) {
    return a += b;
  }
  friend BudgetAmount operator-(BudgetAmount a, BudgetAmount b) {
    return a -= b;
  }
  friend bool operator==(BudgetAmount a, BudgetAmount b) {
    return a.units_ == b.units_;
  }
  friend bool operator!=(BudgetAmount a, BudgetAmount b) { return !(a == b); }
  friend bool operator<(BudgetAmount a, BudgetAmount b) {
    return a.units_ < b.units_;
  }
  friend bool operator>(BudgetAmount a, BudgetAmount b) { return b < a; }
  friend bool operator<=(BudgetAmount a, BudgetAmount b) { return !(b < a); }
  friend bool operator>=(BudgetAmount a, BudgetAmount b) { return !(a < b); }

 private:
  absl::int128 units_ = 0;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_BUDGET_AMOUNT_H_
