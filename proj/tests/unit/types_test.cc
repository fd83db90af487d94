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

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace sandbox_dp {
namespace {

TEST(KeyTest, HexRoundTrip) {
  const Key k = Key::FromParts(0xa, 0x5f);
  EXPECT_EQ(k.ToHex(), "000000000000000a000000000000005f");
  absl::StatusOr<Key> back = Key::FromHex(k.ToHex());
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, k);
  EXPECT_EQ(*Key::FromHex("5F"), Key::FromParts(0, 0x5f));
}

TEST(KeyTest, RejectsBadHex) {
  EXPECT_FALSE(Key::FromHex("").ok());
  EXPECT_FALSE(Key::FromHex("xyz").ok());
  EXPECT_FALSE(Key::FromHex(std::string(33, '1')).ok());
}

TEST(CombineKeysTest, IsBitwiseOr) {
  EXPECT_EQ(CombineKeys(Key::FromParts(0xa, 0), Key::FromParts(0, 0x5f)),
            Key::FromParts(0xa, 0x5f));
  EXPECT_EQ(CombineKeys(Key::FromParts(0, 0b1100), Key::FromParts(0, 0b1010)),
            Key::FromParts(0, 0b1110));
}

TEST(FiltersMatchTest, NeedsNonEmptyIntersection) {
  EXPECT_TRUE(FiltersMatch({"sneakers", "sandals"}, {"sneakers"}));
  EXPECT_FALSE(FiltersMatch({"sneakers"}, {"sandals"}));
  EXPECT_FALSE(FiltersMatch({}, {"sandals"}));
  EXPECT_FALSE(FiltersMatch({"sandals"}, {}));
  EXPECT_FALSE(FiltersMatch({}, {}));
}

TEST(SourceActiveTest, InclusiveOnBothEnds) {
  SourceRegistration s;
  s.registered_at = 10;
  s.expiry = 20;
  EXPECT_FALSE(SourceActive(s, 9));
  EXPECT_TRUE(SourceActive(s, 10));
  EXPECT_TRUE(SourceActive(s, 20));
  EXPECT_FALSE(SourceActive(s, 21));
}

}  // namespace
}  // namespace sandbox_dp
