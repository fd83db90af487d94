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

#include <cmath>
#include <map>

#include "gtest/gtest.h"
#include "sandbox_dp/compensated_sum.h"

namespace sandbox_dp {
namespace {

TEST(ComputeTauTest, FrozenValues) {
  // ceil(65536 * (1 + ln 100)) with 65536 * (1 + ln 100) = 367340.43...
  EXPECT_EQ(ComputeTau(65536, 1, 1.0, 0.01)->value(), 367341);
  // 1 + ln(e) = 2 lands exactly on an integer.
  EXPECT_EQ(ComputeTau(1, 1, 1.0, std::exp(-1.0))->value(), 2);
  // ceil(2 * (1 + ln 20)) = ceil(7.99...) = 8.
  EXPECT_EQ(ComputeTau(2, 1, 1.0, 0.05)->value(), 8);
}

TEST(ComputeTauTest, ZeroDeltaIsUntruncated) {
  absl::StatusOr<std::optional<int64_t>> t = ComputeTau(10, 1, 1.0, 0.0);
  ASSERT_TRUE(t.ok());
  EXPECT_FALSE(t->has_value());
}

TEST(ComputeTauTest, RejectsBadArguments) {
  EXPECT_FALSE(ComputeTau(10, 1, 0.0, 0.1).ok());
  EXPECT_FALSE(ComputeTau(10, 1, 1.0, -0.1).ok());
  EXPECT_FALSE(ComputeTau(10, 1, 1.0, 1.5).ok());
  EXPECT_FALSE(ComputeTau(0, 1, 1.0, 0.1).ok());
}

TEST(DLapTest, PmfSmallCase) {
  // a = ln 2, tau = 1: weights 1/2, 1, 1/2 over -1, 0, 1.
  DLapParam p = *DLapParam::Create(std::log(2.0), 1);
  EXPECT_NEAR(static_cast<double>(DLapPmf(p, 0)), 0.5, 1e-15);
  EXPECT_NEAR(static_cast<double>(DLapPmf(p, 1)), 0.25, 1e-15);
  EXPECT_NEAR(static_cast<double>(DLapPmf(p, -1)), 0.25, 1e-15);
  EXPECT_EQ(DLapPmf(p, 2), 0.0L);
  EXPECT_NEAR(static_cast<double>(*TruncatedDLapTail(p, 1)), 0.25, 1e-15);
}

TEST(DLapTest, PmfSumsToOne) {
  for (int64_t tau : {1, 5, 40}) {
    DLapParam p = *DLapParam::Create(0.3, tau);
    CompensatedSum<long double> s;
    for (int64_t x = -tau; x <= tau; ++x) s += DLapPmf(p, x);
    EXPECT_NEAR(static_cast<double>(s.value()), 1.0, 1e-15);
  }
  DLapParam u = *DLapParam::Create(0.5, std::nullopt);
  CompensatedSum<long double> s;
  for (int64_t x = -200; x <= 200; ++x) s += DLapPmf(u, x);
  EXPECT_NEAR(static_cast<double>(s.value()), 1.0, 1e-15);
}

TEST(DLapTest, CdfMatchesPmf) {
  DLapParam p = *DLapParam::Create(0.7, 6);
  long double acc = 0.0L;
  for (int64_t x = -6; x <= 6; ++x) {
    acc += DLapPmf(p, x);
    EXPECT_NEAR(static_cast<double>(DLapCdf(p, x)), static_cast<double>(acc),
                1e-15);
  }
}

TEST(DLapTest, SamplesStayInRange) {
  DLapParam p = *DLapParam::Create(0.1, 3);
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const int64_t x = SampleDLap(p, rng);
    ASSERT_LE(std::llabs(x), 3);
  }
}

TEST(DLapTest, SampleDeterministicPerSeed) {
  DLapParam p = *DLapParam::Create(1.0 / 20.0, std::nullopt);
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(SampleDLap(p, a), SampleDLap(p, b));
}

TEST(DLapTest, EmpiricalMatchesPmf) {
  DLapParam p = *DLapParam::Create(1.0, 4);
  Rng rng(17);
  std::map<int64_t, int> counts;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[SampleDLap(p, rng)];
  for (int64_t x = -4; x <= 4; ++x) {
    EXPECT_NEAR(counts[x] / static_cast<double>(n),
                static_cast<double>(DLapPmf(p, x)), 0.005);
  }
}

TEST(DLapTest, CreateRejectsBadParameters) {
  EXPECT_FALSE(DLapParam::Create(0.0, 3).ok());
  EXPECT_FALSE(DLapParam::Create(1.0, 0).ok());
}

TEST(TailTest, BoundedByDeltaAtComputedTau) {
  for (int64_t a1 : {1, 2, 4}) {
    for (double eps : {0.5, 1.0, 2.0}) {
      for (double delta : {0.1, 0.01}) {
        const int64_t tau = ComputeTau(a1, 1, eps, delta)->value();
        DLapParam p = *DLapParam::Create(eps / a1, tau);
        EXPECT_LE(*TruncatedDLapTail(p, a1), delta) << a1 << " " << eps;
      }
    }
  }
}

}  // namespace
}  // namespace sandbox_dp
