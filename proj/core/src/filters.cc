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

#include "sandbox_dp/compensated_sum.h"
#include "sandbox_dp/interactive.h"

namespace sandbox_dp {
namespace {

bool SumsWithinCaps(absl::Span<const PrivacyParams> history,
                    PrivacyParams theta, PrivacyParams caps) {
  CompensatedSum<long double> first;
  CompensatedSum<long double> delta;
  for (const PrivacyParams& h : history) {
    first += h.first;
    delta += h.delta;
  }
  first += theta.first;
  delta += theta.delta;
  return first.value() <= static_cast<long double>(caps.first) &&
         delta.value() <= static_cast<long double>(caps.delta);
}

}  // namespace

bool PrivacyFilter::Accepts(absl::Span<const PrivacyParams> history,
                            PrivacyParams theta) const {
  // Both filters share the additive rule; only the meaning of `first` differs.
  return SumsWithinCaps(history, theta, caps_);
}

bool FilterEpsDelta(absl::Span<const PrivacyParams> history,
                    PrivacyParams theta, PrivacyParams caps) {
  return PrivacyFilter(FilterKind::kEpsDelta, caps).Accepts(history, theta);
}

bool FilterRhoDelta(absl::Span<const PrivacyParams> history,
                    PrivacyParams theta, PrivacyParams caps) {
  return PrivacyFilter(FilterKind::kRhoDelta, caps).Accepts(history, theta);
}

}  // namespace sandbox_dp
