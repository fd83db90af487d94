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

#include "sandbox_dp/budget_amount.h"

#include <charconv>
#include <cmath>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"

namespace sandbox_dp {
namespace {

constexpr int kMaxIntegerDigits = 15;

absl::int128 Pow10(int n) {
  absl::int128 p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

}  // namespace

BudgetAmount BudgetAmount::FromInteger(int64_t whole) {
  return FromUnits(absl::int128(whole) * Pow10(kFractionDigits));
}

absl::StatusOr<BudgetAmount> BudgetAmount::FromDecimalString(
    std::string_view text, Rounding rounding) {
  auto bad = [&](std::string_view why) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid budget amount \"", std::string(text), "\": ",
                     std::string(why)));
  };
  if (text.empty()) return bad("empty");

  // Split into mantissa and optional exponent.
  std::string_view mantissa = text;
  int exponent = 0;
  if (const size_t e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    if (!absl::SimpleAtoi(absl::string_view(text.data() + e + 1,
                                             text.size() - e - 1),
                            &exponent)) {
      return bad("bad exponent");
    }
    if (exponent > 40 || exponent < -60) return bad("exponent out of range");
  }

  std::string digits;
  int fraction_digits = 0;
  bool seen_point = false;
  for (char c : mantissa) {
    if (c == '.') {
      if (seen_point) return bad("more than one decimal point");
      seen_point = true;
    } else if (absl::ascii_isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_point) ++fraction_digits;
    } else {
      return bad("unexpected character");
    }
  }
  if (digits.empty()) return bad("no digits");

  // value = digits * 10^(exponent - fraction_digits); rescale to units.
  int shift = kFractionDigits + exponent - fraction_digits;
  // Drop leading zeros so long zero-padded inputs do not overflow.
  const size_t first_nonzero = digits.find_first_not_of('0');
  if (first_nonzero == std::string::npos) return FromUnits(0);
  digits.erase(0, first_nonzero);

  bool round_up = false;
  if (shift < 0) {
    // Truncate the digits that fall below the unit.
    const size_t drop = static_cast<size_t>(-shift);
    const size_t keep = drop >= digits.size() ? 0 : digits.size() - drop;
    // Leading zeros are gone, so any dropped digit string here is non-zero
    // unless it ends in zeros only.
    const bool lost =
        digits.find_first_not_of('0', keep) != std::string::npos;
    if (lost) {
      if (rounding == Rounding::kExact) {
        return bad(absl::StrCat("more than ", kFractionDigits,
                                " fractional digits"));
      }
      round_up = true;
    }
    digits.resize(keep);
    if (digits.empty()) digits = "0";
    shift = 0;
  }
  if (static_cast<int>(digits.size()) + shift >
      kMaxIntegerDigits + kFractionDigits) {
    return bad("too large");
  }
  absl::int128 units = 0;
  for (char c : digits) units = units * 10 + (c - '0');
  units *= Pow10(shift);
  if (round_up) units += 1;
  return FromUnits(units);
}

absl::StatusOr<BudgetAmount> BudgetAmount::FromDouble(double value,
                                                      Rounding rounding) {
  if (!std::isfinite(value) || value < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("budget amount must be finite and non-negative, got ",
                     value));
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (result.ec != std::errc()) {
    return absl::InternalError("failed to format double");
  }
  return FromDecimalString(std::string_view(buffer, result.ptr - buffer),
                           rounding);
}

std::string BudgetAmount::ToDecimalString() const {
  absl::int128 v = units_;
  std::string sign;
  if (v < 0) {
    sign = "-";
    v = -v;
  }
  const absl::int128 scale = Pow10(kFractionDigits);
  const absl::int128 whole = v / scale;
  absl::int128 frac = v % scale;
  std::string out = sign;
  // absl::int128 has no StrCat overload on every version; format manually.
  std::string whole_digits;
  absl::int128 w = whole;
  do {
    whole_digits.insert(whole_digits.begin(),
                        static_cast<char>('0' + static_cast<int>(w % 10)));
    w /= 10;
  } while (w > 0);
  out += whole_digits;
  if (frac != 0) {
    std::string frac_digits(kFractionDigits, '0');
    for (int i = kFractionDigits - 1; i >= 0; --i) {
      frac_digits[i] = static_cast<char>('0' + static_cast<int>(frac % 10));
      frac /= 10;
    }
    while (!frac_digits.empty() && frac_digits.back() == '0') {
      frac_digits.pop_back();
    }
    out += ".";
    out += frac_digits;
  }
  return out;
}

double BudgetAmount::ToDouble() const {
  // Round-trip through the decimal string for a correctly rounded result.
  double out = 0.0;
  const std::string s = ToDecimalString();
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

}  // namespace sandbox_dp
