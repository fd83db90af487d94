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

#include "sandbox_dp/event_mechanism.h"

#include <cmath>
#include <limits>
#include <memory>

#include "gtest/gtest.h"
#include "sandbox_dp/dp_audit.h"

namespace sandbox_dp {
namespace {

constexpr Tick kDay = kTicksPerDay;

TriggerSpec ShoeSpec() {
  return TriggerSpec{{TriggerSpecEntry{0, {2 * kDay, 7 * kDay}, {20, 70}},
                      TriggerSpecEntry{1, {1 * kDay, 5 * kDay}, {10, 50}}}};
}

EventSource ShoeSource() {
  EventSource s;
  s.src_id = "blog-ad";
  s.dest = "shoes.example";
  s.expiry = 7 * kDay;
  s.filters = {"sneakers", "sandals", "flip-flops"};
  s.max_reports = 3;
  s.spec = ShoeSpec();
  return s;
}

EventTrigger ShoeTrigger(std::string id, std::string filter, int data,
                         int64_t value, Tick time) {
  return EventTrigger{"shoes.example", std::move(id), {std::move(filter)},
                      data, value, time};
}

TEST(TriggerSpecTest, Validate) {
  EXPECT_TRUE(ShoeSpec().Validate().ok());
  TriggerSpec dup = ShoeSpec();
  dup.entries[1].trig_data = 0;
  EXPECT_FALSE(dup.Validate().ok());
  TriggerSpec unsorted = ShoeSpec();
  unsorted.entries[0].buckets = {70, 20};
  EXPECT_FALSE(unsorted.Validate().ok());
  TriggerSpec no_windows = ShoeSpec();
  no_windows.entries[0].windows.clear();
  EXPECT_FALSE(no_windows.Validate().ok());
  EXPECT_EQ(ShoeSpec().EntryFor(1), 1);
  EXPECT_FALSE(ShoeSpec().EntryFor(5).has_value());
}

TEST(OutputSetTest, ShoeSpecCounts) {
  absl::StatusOr<OutputSet> o = OutputSet::Enumerate(ShoeSpec(), 3);
  ASSERT_TRUE(o.ok()) << o.status();
  EXPECT_EQ(o->EntryOptionCounts(), (std::vector<int64_t>{6, 6}));
  // 36 pairs minus the 9 with more than three reports.
  EXPECT_EQ(o->size(), 27u);
  EXPECT_EQ(o->slots().size(), 4u);
  EXPECT_EQ(o->step_offsets(),
            (std::vector<Tick>{1 * kDay, 2 * kDay, 5 * kDay, 7 * kDay}));
  for (const SlotCounts& m : o->members()) {
    int total = 0;
    for (int c : m) total += c;
    EXPECT_LE(total, 3);
    EXPECT_TRUE(o->IsValidPartial(m));
  }
}

TEST(OutputSetTest, SizeGuard) {
  EXPECT_FALSE(OutputSet::Enumerate(ShoeSpec(), 3, 10).ok());
  absl::StatusOr<OutputSet> zero = OutputSet::Enumerate(ShoeSpec(), 0);
  ASSERT_TRUE(zero.ok());
  EXPECT_EQ(zero->size(), 1u);
}

TEST(OutputSetTest, PartialValidity) {
  absl::StatusOr<OutputSet> o = OutputSet::Enumerate(ShoeSpec(), 1);
  ASSERT_TRUE(o.ok());
  EXPECT_EQ(o->size(), 5u);
  EXPECT_TRUE(o->IsValidPartial(SlotCounts(4, 0)));
  EXPECT_FALSE(o->IsValidPartial(SlotCounts{1, 0, 1, 0}));
  EXPECT_FALSE(o->IsValidPartial(SlotCounts{3, 0, 0, 0}));
}

TEST(EventLevelClientTest, ShoeWalkthrough) {
  EventLevelClient client;
  ASSERT_TRUE(client.RegisterSource(ShoeSource()).ok());
  std::vector<EventReport> all;
  auto take = [&](absl::StatusOr<std::vector<EventReport>> r) {
    ASSERT_TRUE(r.ok()) << r.status();
    all.insert(all.end(), r->begin(), r->end());
  };
  take(client.RegisterTrigger(ShoeTrigger("t1", "sneakers", 0, 30, kDay / 2)));
  EXPECT_EQ(client.last_attribution(), "blog-ad");
  take(client.RegisterTrigger(
      ShoeTrigger("t2", "sandals", 1, 60, kDay + kDay / 2)));
  take(client.RegisterTrigger(
      ShoeTrigger("t3", "sneakers", 0, 65, 3 * kDay + kDay / 2)));
  take(client.RegisterTrigger(
      ShoeTrigger("t4", "sneakers", 0, 10, 5 * kDay + kDay / 2)));
  take(client.AdvanceTo(8 * kDay));
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], (EventReport{"blog-ad", 0, 20, 0, 2 * kDay}));
  EXPECT_EQ(all[1], (EventReport{"blog-ad", 1, 10, 1, 5 * kDay}));
  EXPECT_EQ(all[2], (EventReport{"blog-ad", 1, 50, 1, 5 * kDay}));
  EXPECT_EQ(client.counter("blog-ad")->reports_sent(), 3);
  EXPECT_EQ(client.counter("blog-ad")->value(0), 105);
}

TEST(EventLevelClientTest, TriggerAtDeadlineCounts) {
  EventLevelClient client;
  ASSERT_TRUE(client.RegisterSource(ShoeSource()).ok());
  ASSERT_TRUE(
      client.RegisterTrigger(ShoeTrigger("t", "sandals", 1, 15, kDay)).ok());
  absl::StatusOr<std::vector<EventReport>> r = client.AdvanceTo(kDay);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->size(), 1u);
  EXPECT_EQ((*r)[0].bucket, 10);
}

TEST(EventLevelClientTest, UnlistedTriggerDataFallsThrough) {
  EventLevelClient client;
  EventSource older = ShoeSource();
  older.src_id = "older";
  older.seq = 1;
  EventSource newer = ShoeSource();
  newer.src_id = "newer";
  newer.seq = 2;
  newer.spec.entries.pop_back();  // lists only trig_data 0
  ASSERT_TRUE(client.RegisterSource(older).ok());
  ASSERT_TRUE(client.RegisterSource(newer).ok());
  ASSERT_TRUE(client.RegisterTrigger(ShoeTrigger("a", "sandals", 1, 5, 10)).ok());
  EXPECT_EQ(client.last_attribution(), "older");
  ASSERT_TRUE(client.RegisterTrigger(ShoeTrigger("b", "sneakers", 0, 5, 11)).ok());
  EXPECT_EQ(client.last_attribution(), "newer");
  ASSERT_TRUE(client.RegisterTrigger(ShoeTrigger("c", "boots", 0, 5, 12)).ok());
  EXPECT_FALSE(client.last_attribution().has_value());
}

TEST(EventLevelClientTest, RejectsOutOfOrderAndDuplicates) {
  EventLevelClient client;
  ASSERT_TRUE(client.RegisterSource(ShoeSource()).ok());
  EventSource again = ShoeSource();
  again.seq = 5;
  EXPECT_TRUE(absl::IsAlreadyExists(client.RegisterSource(again)));
  ASSERT_TRUE(client.AdvanceTo(100).ok());
  EXPECT_FALSE(client.AdvanceTo(99).ok());
  EXPECT_FALSE(
      client.RegisterTrigger(ShoeTrigger("x", "sneakers", 40, 1, 200)).ok());
}

TEST(TruthfulProbabilityTest, Values) {
  EXPECT_NEAR(static_cast<double>(TruthfulProbability(std::log(3.0), 2)), 0.5,
              1e-15);
  EXPECT_EQ(TruthfulProbability(std::numeric_limits<double>::infinity(), 27),
            1.0L);
  EXPECT_NEAR(static_cast<double>(TruthfulProbability(2.0, 27)),
              std::expm1(2.0) / (std::exp(2.0) + 26.0), 1e-15);
}

std::vector<EventRecord> ShoeRecords(const UnitId& x) {
  return {EventRecord{x, "t1", 0, 30, kDay / 2},
          EventRecord{x, "t2", 1, 60, kDay + kDay / 2},
          EventRecord{x, "t3", 0, 65, 3 * kDay + kDay / 2}};
}

TEST(NoiselessCountsTest, MatchesClient) {
  absl::StatusOr<OutputSet> o = OutputSet::Enumerate(ShoeSpec(), 3);
  ASSERT_TRUE(o.ok());
  const std::vector<EventRecord> records = ShoeRecords(UnitId::Source("s"));
  const SlotCounts full = NoiselessCounts(*o, records);
  // Slots: (0, 2d) (0, 7d) (1, 1d) (1, 5d). The cap of three is reached at
  // 5d, so the 7d sneakers bucket is never reported.
  EXPECT_EQ(full, (SlotCounts{1, 0, 0, 2}));
  std::vector<EventReport> reports = ReportsFor(*o, "s", 0, full);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0], (EventReport{"s", 0, 20, 0, 2 * kDay}));
}

TEST(IrrTest, StepOutcomesSumToOneAndGuard) {
  auto o = std::make_shared<const OutputSet>(*OutputSet::Enumerate(ShoeSpec(), 3));
  const std::vector<EventRecord> records = ShoeRecords(UnitId::Source("s"));
  IrrState state;
  for (size_t step = 0; step < o->num_steps(); ++step) {
    auto outcomes = IrrStepOutcomes(state, *o, 1.0, records,
                                    NoiselessStepQuery(o, step));
    long double total = 0.0L;
    for (const auto& [p, answer, next] : outcomes) total += p;
    EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-15);
    state = std::get<2>(outcomes.front());
  }
  // A query that always reports three buckets in the first slot cannot
  // extend past the cap once combined with more, so it turns to zeros.
  EventQuery greedy = [](absl::Span<const EventRecord>) {
    return StepCounts{5};
  };
  IrrState truthful;
  truthful.committed = true;
  truthful.emitted = SlotCounts(o->slots().size(), 0);
  Rng rng(1);
  EXPECT_EQ(IrrStep(truthful, *o, 1.0, records, greedy, rng), StepCounts{0});
}

TEST(IrrTest, InfiniteEpsIsTruthful) {
  auto o = std::make_shared<const OutputSet>(*OutputSet::Enumerate(ShoeSpec(), 3));
  const std::vector<EventRecord> records = ShoeRecords(UnitId::Source("s"));
  IrrState state;
  Rng rng(9);
  SlotCounts emitted(o->slots().size(), 0);
  for (size_t step = 0; step < o->num_steps(); ++step) {
    StepCounts c = IrrStep(state, *o, std::numeric_limits<double>::infinity(),
                           records, NoiselessStepQuery(o, step), rng);
    for (size_t i = 0; i < c.size(); ++i) emitted[o->step_slots(step)[i]] = c[i];
  }
  EXPECT_EQ(emitted, NoiselessCounts(*o, records));
}

TEST(MerMechanismTest, NeighboursWithinEps) {
  const UnitId x = UnitId::Source("x");
  auto o = std::make_shared<const OutputSet>(*OutputSet::Enumerate(ShoeSpec(), 1));
  MerParams params;
  params.eps = 1.0;
  params.outputs[x] = o;
  absl::StatusOr<MerMechanism> m = MerMechanism::Create(params);
  ASSERT_TRUE(m.ok()) << m.status();
  EventDatabase db{ShoeRecords(x)};
  auto run = [&](const EventDatabase& d) {
    Adversary<MerMechanism> adv =
        [&, d](absl::Span<const MerMechanism::Response> h)
        -> std::optional<Turn<MerMechanism>> {
      if (h.size() == o->num_steps()) return std::nullopt;
      return Turn<MerMechanism>{d, NoiselessMerQuery(params, h.size())};
    };
    return ExactTranscriptDistribution(*m, adv);
  };
  auto p = run(db);
  auto q = run(RemoveEventUnit(db, x));
  ASSERT_TRUE(p.ok());
  ASSERT_TRUE(q.ok());
  EXPECT_NEAR(static_cast<double>(TotalMass(*p)), 1.0, 1e-15);
  EXPECT_LE(HockeyStickDelta(*p, *q, 1.0), kAuditSlack);
  EXPECT_GT(HockeyStickDelta(*p, *q, 0.9), 1e-3L);
  EXPECT_TRUE(RecordsOf(RemoveEventUnit(db, x), x).empty());
}

}  // namespace
}  // namespace sandbox_dp
