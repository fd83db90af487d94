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

#include "sandbox_dp/types.h"

#include <algorithm>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace sandbox_dp {

template <typename Tag>
std::string Id128<Tag>::ToHex() const {
  return absl::StrFormat("%016x%016x", absl::Uint128High64(bits_),
                         absl::Uint128Low64(bits_));
}

template <typename Tag>
absl::StatusOr<Id128<Tag>> Id128<Tag>::FromHex(std::string_view hex) {
  if (hex.empty() || hex.size() > 32) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected 1 to 32 hex digits, got \"", std::string(hex),
                     "\""));
  }
  absl::uint128 bits = 0;
  for (char c : hex) {
    int digit;
    if (c >= '0' && c <= '9') {
      digit = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      digit = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      digit = c - 'A' + 10;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid hex digit in \"", std::string(hex), "\""));
    }
    bits = (bits << 4) | absl::uint128(digit);
  }
  return Id128(bits);
}

template class Id128<KeyTag>;
template class Id128<ReportIdTag>;

bool FiltersMatch(const FilterSet& source_filters,
                  const FilterSet& trigger_filters) {
  // Both sets are ordered, so a merge walk suffices.
  auto a = source_filters.begin();
  auto b = trigger_filters.begin();
  while (a != source_filters.end() && b != trigger_filters.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

}  // namespace sandbox_dp
