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

// Line-delimited JSON export of a summary-mechanism run, enough to replay
// the per-unit rollout.
//
//   {"type":"params","contribution_budget":..,"sparsity_budget":..,
//    "eps_star":"..","delta_star":".."}
//   {"type":"query","turn":0,"eps":"..","delta":"..","reports":["<hex>",..]}
//   {"type":"admit","turn":0,"unit":{..},"y":"<hex>","key":"<hex>","value":v}
//   {"type":"abort","turn":0}
//
// Real numbers are shortest round-trip decimal strings.

#ifndef SANDBOX_DP_ROLLOUT_TRACE_H_
#define SANDBOX_DP_ROLLOUT_TRACE_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "sandbox_dp/summary_mechanism.h"

namespace sandbox_dp {

struct RolloutTrace {
  ContributionBounds bounds;
  double eps_star = 0.0;
  double delta_star = 0.0;
  std::vector<MsrTurnTrace> turns;

  friend bool operator==(const RolloutTrace&, const RolloutTrace&) = default;
};

RolloutTrace TraceOf(const MsrMechanism& mechanism);

std::string SerializeRolloutTrace(const RolloutTrace& trace);
absl::StatusOr<RolloutTrace> ParseRolloutTrace(std::string_view text);

// Shortest decimal string that parses back to `value`.
std::string DoubleToString(double value);
absl::StatusOr<double> DoubleFromString(std::string_view text);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_ROLLOUT_TRACE_H_
