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

#include "gtest/gtest.h"

namespace sandbox_dp {
namespace {

using Rounding = BudgetAmount::Rounding;

TEST(BudgetAmountTest, ParsesDecimalForms) {
  EXPECT_EQ(BudgetAmount::FromDecimalString("12")->ToDecimalString(), "12");
  EXPECT_EQ(BudgetAmount::FromDecimalString("0.25")->ToDecimalString(), "0.25");
  EXPECT_EQ(BudgetAmount::FromDecimalString(".5")->ToDecimalString(), "0.5");
  EXPECT_EQ(BudgetAmount::FromDecimalString("1e-05")->ToDecimalString(),
            "0.00001");
  EXPECT_EQ(BudgetAmount::FromDecimalString("2.5E3")->ToDecimalString(),
            "2500");
  EXPECT_EQ(BudgetAmount::FromDecimalString("1.500")->ToDecimalString(), "1.5");
}

TEST(BudgetAmountTest, RejectsGarbage) {
  EXPECT_FALSE(BudgetAmount::FromDecimalString("").ok());
  EXPECT_FALSE(BudgetAmount::FromDecimalString("-1").ok());
  EXPECT_FALSE(BudgetAmount::FromDecimalString("1.2.3").ok());
  EXPECT_FALSE(BudgetAmount::FromDecimalString("abc").ok());
}

TEST(BudgetAmountTest, ExactRejectsTooManyDigitsUpRounds) {
  const std::string tiny = "0.0000000000000000001";  // 19 decimals
  EXPECT_FALSE(BudgetAmount::FromDecimalString(tiny, Rounding::kExact).ok());
  absl::StatusOr<BudgetAmount> up =
      BudgetAmount::FromDecimalString(tiny, Rounding::kUp);
  ASSERT_TRUE(up.ok());
  EXPECT_EQ(up->units(), 1);
}

TEST(BudgetAmountTest, FromDoubleUsesShortestDecimal) {
  EXPECT_EQ(BudgetAmount::FromDouble(0.1)->ToDecimalString(), "0.1");
  EXPECT_EQ(BudgetAmount::FromDouble(0.3)->ToDecimalString(), "0.3");
}

TEST(BudgetAmountTest, RepeatedTenthsHitOneExactly) {
  BudgetAmount sum;
  const BudgetAmount tenth = *BudgetAmount::FromDouble(0.1);
  for (int i = 0; i < 10; ++i) sum += tenth;
  EXPECT_EQ(sum, BudgetAmount::FromInteger(1));
  // The double sum drifts; the decimal one does not.
  double d = 0.0;
  for (int i = 0; i < 10; ++i) d += 0.1;
  EXPECT_NE(d, 1.0);
}

TEST(BudgetAmountTest, Ordering) {
  const BudgetAmount a = *BudgetAmount::FromDecimalString("0.01");
  const BudgetAmount b = *BudgetAmount::FromDecimalString("0.1");
  EXPECT_LT(a, b);
  EXPECT_EQ((b - a).ToDecimalString(), "0.09");
  EXPECT_NEAR((a + b).ToDouble(), 0.11, 1e-17);
}

}  // namespace
}  // namespace sandbox_dp
