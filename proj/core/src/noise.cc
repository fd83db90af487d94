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

#include "sandbox_dp/noise.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "sandbox_dp/compensated_sum.h"

namespace sandbox_dp {
namespace {

// 1 - exp(-a), computed without cancellation.
long double OneMinusR(long double a) { return -std::expm1(-a); }

// sum_{k=lo}^{hi} exp(-a k) for 0 <= lo, hi possibly infinite (nullopt).
long double GeometricRangeSum(long double a, int64_t lo,
                              std::optional<int64_t> hi) {
  if (hi.has_value() && *hi < lo) return 0.0L;
  const long double head = std::exp(-a * static_cast<long double>(lo));
  if (!hi.has_value()) return head / OneMinusR(a);
  const long double count = static_cast<long double>(*hi - lo + 1);
  // head * (1 - r^count) / (1 - r)
  return head * -std::expm1(-a * count) / OneMinusR(a);
}

}  // namespace

absl::StatusOr<DLapParam> DLapParam::Create(double a,
                                            std::optional<int64_t> tau) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    return absl::InvalidArgumentError(
        absl::StrCat("discrete Laplace scale must be positive, got ", a));
  }
  if (tau.has_value() && *tau < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("truncation bound must be >= 1, got ", *tau));
  }
  return DLapParam{a, tau};
}

long double DLapNormalizer(const DLapParam& p) {
  const long double a = p.a;
  if (!p.tau.has_value()) {
    // (1 + r) / (1 - r)
    return (2.0L - OneMinusR(a)) / OneMinusR(a);
  }
  return 1.0L + 2.0L * GeometricRangeSum(a, 1, *p.tau);
}

long double DLapPmf(const DLapParam& p, int64_t x) {
  const int64_t magnitude = x < 0 ? -x : x;
  if (p.tau.has_value() && magnitude > *p.tau) return 0.0L;
  return std::exp(-static_cast<long double>(p.a) * magnitude) /
         DLapNormalizer(p);
}

long double DLapCdf(const DLapParam& p, int64_t x) {
  const long double a = p.a;
  if (p.tau.has_value()) {
    if (x < -*p.tau) return 0.0L;
    if (x >= *p.tau) return 1.0L;
  }
  const long double z = DLapNormalizer(p);
  if (x < 0) {
    // Mass on [-tau, x] = sum_{k=|x|}^{tau} r^k.
    return GeometricRangeSum(a, -x, p.tau) / z;
  }
  // 1 - mass on (x, tau].
  return 1.0L - GeometricRangeSum(a, x + 1, p.tau) / z;
}

int64_t SampleDLap(const DLapParam& p, Rng& rng) {
  if (p.tau.has_value()) {
    const long double u = rng.UniformOpenClosed();
    int64_t lo = -*p.tau;
    int64_t hi = *p.tau;
    // Smallest x with CDF(x) >= u.
    while (lo < hi) {
      const int64_t mid = lo + (hi - lo) / 2;
      if (DLapCdf(p, mid) >= u) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }
  const long double a = p.a;
  auto geometric = [&]() -> int64_t {
    const long double u = rng.UniformOpenClosed();
    return static_cast<int64_t>(std::floor(-std::log(u) / a));
  };
  const int64_t g1 = geometric();
  const int64_t g2 = geometric();
  return g1 - g2;
}

absl::StatusOr<std::optional<int64_t>> ComputeTau(int64_t contribution_budget,
                                                  int64_t sparsity_budget,
                                                  double eps, double delta) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", eps));
  }
  if (!(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1], got ", delta));
  }
  if (contribution_budget <= 0 || sparsity_budget <= 0) {
    return absl::InvalidArgumentError(
        "contribution and sparsity budgets must be positive");
  }
  if (delta == 0.0) return std::optional<int64_t>();

  const long double raw =
      static_cast<long double>(contribution_budget) *
      (1.0L + std::log(static_cast<long double>(sparsity_budget) /
                       static_cast<long double>(delta)) /
                  static_cast<long double>(eps));
  if (!(raw < 0x1.0p62L)) {
    return absl::OutOfRangeError(
        absl::StrCat("truncation bound too large for eps=", eps,
                     " delta=", delta));
  }
  const long double nearest = std::round(raw);
  long double bound;
  if (std::abs(raw - nearest) <= 1e-12L * std::max(1.0L, raw)) {
    bound = nearest;
  } else {
    bound = std::ceil(raw);
  }
  return std::optional<int64_t>(std::max<int64_t>(1, static_cast<int64_t>(bound)));
}

absl::StatusOr<long double> TruncatedDLapTail(const DLapParam& p,
                                              int64_t shift) {
  if (!p.tau.has_value()) {
    return absl::InvalidArgumentError("tail bound requires a finite tau");
  }
  const int64_t tau = *p.tau;
  if (shift < 1 || shift > 2 * tau) {
    return absl::InvalidArgumentError(
        absl::StrCat("shift must lie in [1, 2*tau], got ", shift));
  }
  CompensatedSum<long double> sum;
  for (int64_t x = tau - shift + 1; x <= tau; ++x) sum.Add(DLapPmf(p, x));
  return sum.value();
}

}  // namespace sandbox_dp
