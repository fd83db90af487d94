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

// Discrete Laplace noise, DLap_tau(a): mass at integer x proportional to
// exp(-a|x|), restricted to [-tau, tau] when tau is finite.

#ifndef SANDBOX_DP_NOISE_H_
#define SANDBOX_DP_NOISE_H_

#include <cstdint>
#include <optional>

#include "absl/status/statusor.h"
#include "sandbox_dp/random.h"

namespace sandbox_dp {

struct DLapParam {
  // Scale exponent, > 0.
  double a = 1.0;
  // Truncation bound >= 1; nullopt means untruncated.
  std::optional<int64_t> tau;

  static absl::StatusOr<DLapParam> Create(double a, std::optional<int64_t> tau);

  bool truncated() const { return tau.has_value(); }
};

// Normalizer sum_{|y| <= tau} exp(-a|y|), closed form.
long double DLapNormalizer(const DLapParam& p);

long double DLapPmf(const DLapParam& p, int64_t x);

// Pr[X <= x].
long double DLapCdf(const DLapParam& p, int64_t x);

// Truncated: inverse CDF over [-tau, tau]. Untruncated: difference of two
// i.i.d. geometric variables with success probability 1 - exp(-a).
int64_t SampleDLap(const DLapParam& p, Rng& rng);

// Truncation bound for the key-discovery threshold:
//   ceil(A1 * (1 + ln(A0 / delta) / eps)), or nullopt (infinite) if delta = 0.
// Values within 1e-12 relative of an integer snap to it, so inputs such as
// delta = exp(-1) are not pushed over by floating-point noise.
absl::StatusOr<std::optional<int64_t>> ComputeTau(int64_t contribution_budget,
                                                  int64_t sparsity_budget,
                                                  double eps, double delta);

// Pr_{X ~ DLap_tau(a)}[X > tau - shift] by exact summation. Requires finite
// tau and 1 <= shift <= 2 * tau.
absl::StatusOr<long double> TruncatedDLapTail(const DLapParam& p,
                                              int64_t shift);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_NOISE_H_
