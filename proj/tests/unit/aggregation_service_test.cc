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

#include "sandbox_dp/aggregation_service.h"

#include <atomic>
#include <thread>
#include <vector>

#include "gtest/gtest.h"

namespace sandbox_dp {
namespace {

BudgetAmount Dec(const char* s) { return *BudgetAmount::FromDecimalString(s); }

ReportId Id(uint64_t n) { return ReportId::FromParts(0, n); }

TEST(PrivacyBudgetLedgerTest, ChargesUntilCap) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(1), Dec("0.1"));
  const std::vector<ReportId> ids = {Id(1)};
  for (int i = 0; i < 10; ++i) {
    ASSERT_TRUE(ledger.TryCharge(ids, Dec("0.1"), Dec("0.01")).ok()) << i;
  }
  EXPECT_EQ(ledger.Consumed(Id(1)).eps, BudgetAmount::FromInteger(1));
  EXPECT_TRUE(absl::IsResourceExhausted(ledger.TryCharge(ids, Dec("0.1"), Dec("0"))));
  EXPECT_TRUE(ledger.Remaining(Id(1)).eps.is_zero());
  EXPECT_EQ(ledger.Remaining(Id(2)).eps, BudgetAmount::FromInteger(1));
}

TEST(PrivacyBudgetLedgerTest, AllOrNothing) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(1), Dec("0"));
  ASSERT_TRUE(ledger.TryCharge(std::vector<ReportId>{Id(2)}, Dec("0.9"), Dec("0")).ok());
  ReportId culprit;
  absl::Status s = ledger.TryCharge(std::vector<ReportId>{Id(1), Id(2), Id(3)},
                                    Dec("0.2"), Dec("0"), &culprit);
  EXPECT_TRUE(absl::IsResourceExhausted(s));
  EXPECT_EQ(culprit, Id(2));
  EXPECT_TRUE(ledger.Consumed(Id(1)).eps.is_zero());
  EXPECT_TRUE(ledger.Consumed(Id(3)).eps.is_zero());
}

TEST(PrivacyBudgetLedgerTest, DuplicateIdsChargedOnce) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(1), Dec("0"));
  ASSERT_TRUE(
      ledger.TryCharge(std::vector<ReportId>{Id(1), Id(1)}, Dec("0.6"), Dec("0")).ok());
  EXPECT_EQ(ledger.Consumed(Id(1)).eps, Dec("0.6"));
}

TEST(PrivacyBudgetLedgerTest, SnapshotRoundTrip) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(64), Dec("0.5"));
  ASSERT_TRUE(ledger.TryCharge(std::vector<ReportId>{Id(3), Id(1)}, Dec("1.5"),
                               Dec("0.25"))
                  .ok());
  LedgerSnapshot snap = ledger.Snapshot();
  ASSERT_EQ(snap.records.size(), 2u);
  EXPECT_LT(snap.records[0].id, snap.records[1].id);
  auto copy = PrivacyBudgetLedger::FromSnapshot(snap);
  ASSERT_TRUE(copy.ok());
  EXPECT_EQ((*copy)->Snapshot(), snap);
}

TEST(PrivacyBudgetLedgerTest, FromSnapshotRejectsOverCap) {
  LedgerSnapshot snap{BudgetAmount::FromInteger(1), Dec("0"),
                      {LedgerRecord{Id(1), BudgetUsage{Dec("2"), Dec("0")}}}};
  EXPECT_FALSE(PrivacyBudgetLedger::FromSnapshot(snap).ok());
}

TEST(PrivacyBudgetLedgerTest, ConcurrentChargesNeverExceedCap) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(64), Dec("0"));
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        std::vector<ReportId> ids = {Id(i % 5), Id((i + t) % 5)};
        if (ledger.TryCharge(ids, Dec("0.5"), Dec("0")).ok()) ++ok;
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const LedgerRecord& r : ledger.Snapshot().records) {
    EXPECT_LE(r.used.eps, BudgetAmount::FromInteger(64));
  }
  EXPECT_GT(ok.load(), 0);
}

AggregatableReport Report(uint64_t id, uint64_t key, int64_t value) {
  return AggregatableReport{Id(id), Contribution{Key::FromParts(0, key), value}};
}

TEST(AggregationServiceTest, ListedKeysExactWithoutNoise) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(64), Dec("0.1"));
  AggregationService service(&ledger, ContributionBounds{100, 2},
                             NoiseMode::kDisabledForAudit);
  AggregationRequest req;
  req.batch = {Report(1, 1, 10), Report(2, 1, 5), Report(3, 2, 7),
               AggregatableReport::Null(Id(4))};
  req.mode = ListedKeys{{Key::FromParts(0, 2), Key::FromParts(0, 1),
                         Key::FromParts(0, 3)}};
  Rng rng(1);
  absl::StatusOr<AggregationResult> r = service.Aggregate(req, rng);
  ASSERT_TRUE(r.ok());
  const auto& summary = std::get<SummaryReport>(*r);
  ASSERT_EQ(summary.entries.size(), 3u);
  EXPECT_EQ(summary.entries[0], (SummaryEntry{Key::FromParts(0, 2), 7}));
  EXPECT_EQ(summary.entries[1], (SummaryEntry{Key::FromParts(0, 1), 15}));
  EXPECT_EQ(summary.entries[2], (SummaryEntry{Key::FromParts(0, 3), 0}));
  EXPECT_FALSE(summary.threshold.has_value());
  EXPECT_EQ(ledger.Consumed(Id(1)).eps, BudgetAmount::FromInteger(1));
  // Null reports are never charged.
  EXPECT_TRUE(ledger.Consumed(Id(4)).eps.is_zero());
}

TEST(AggregationServiceTest, AbortChargesNothing) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(1), Dec("0"));
  AggregationService service(&ledger, ContributionBounds{100, 2});
  AggregationRequest req;
  req.batch = {Report(1, 1, 10), Report(2, 1, 5)};
  req.eps = 0.75;
  Rng rng(1);
  ASSERT_TRUE(std::holds_alternative<SummaryReport>(*service.Aggregate(req, rng)));
  req.batch.push_back(Report(3, 1, 1));
  absl::StatusOr<AggregationResult> r = service.Aggregate(req, rng);
  ASSERT_TRUE(r.ok());
  ASSERT_TRUE(std::holds_alternative<AggregationAborted>(*r));
  EXPECT_TRUE(ledger.Consumed(Id(3)).eps.is_zero());
  EXPECT_EQ(ledger.Consumed(Id(1)).eps, Dec("0.75"));
}

TEST(AggregationServiceTest, KeyDiscoveryThresholds) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(64), Dec("1"));
  AggregationService service(&ledger, ContributionBounds{10, 1},
                             NoiseMode::kDisabledForAudit);
  AggregationRequest req;
  req.eps = 1.0;
  req.delta = 0.01;
  req.mode = KeyDiscovery{};
  // tau = ceil(10 (1 + ln 100)) = 57.
  for (uint64_t i = 0; i < 6; ++i) req.batch.push_back(Report(i, 1, 10));
  req.batch.push_back(Report(10, 2, 10));
  Rng rng(1);
  absl::StatusOr<AggregationResult> r = service.Aggregate(req, rng);
  ASSERT_TRUE(r.ok());
  const auto& summary = std::get<SummaryReport>(*r);
  ASSERT_TRUE(summary.threshold.has_value());
  EXPECT_EQ(*summary.threshold, 57);
  ASSERT_EQ(summary.entries.size(), 1u);
  EXPECT_EQ(summary.entries[0], (SummaryEntry{Key::FromParts(0, 1), 60}));
  EXPECT_EQ(ledger.Consumed(Id(0)).delta, Dec("0.01"));
}

TEST(AggregationServiceTest, ListedModeChargesNoDelta) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(64), Dec("0.1"));
  AggregationService service(&ledger, ContributionBounds{10, 1});
  AggregationRequest req;
  req.batch = {Report(1, 1, 1)};
  req.delta = 0.05;
  req.mode = ListedKeys{{Key::FromParts(0, 1)}};
  Rng rng(1);
  ASSERT_TRUE(service.Aggregate(req, rng).ok());
  EXPECT_TRUE(ledger.Consumed(Id(1)).delta.is_zero());
}

TEST(AggregationServiceTest, NoisyOutputDeterministicPerSeed) {
  PrivacyBudgetLedger l1(BudgetAmount::FromInteger(64), Dec("0"));
  PrivacyBudgetLedger l2(BudgetAmount::FromInteger(64), Dec("0"));
  AggregationService s1(&l1, ContributionBounds{100, 1});
  AggregationService s2(&l2, ContributionBounds{100, 1});
  AggregationRequest req;
  req.batch = {Report(1, 1, 40)};
  req.mode = ListedKeys{{Key::FromParts(0, 1)}};
  Rng a(5), b(5);
  auto ra = s1.Aggregate(req, a);
  auto rb = s2.Aggregate(req, b);
  EXPECT_EQ(std::get<SummaryReport>(*ra).entries,
            std::get<SummaryReport>(*rb).entries);
}

}  // namespace
}  // namespace sandbox_dp
