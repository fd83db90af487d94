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

#include "sandbox_dp/summary_mechanism.h"

#include <cmath>

#include "gtest/gtest.h"
#include "sandbox_dp/dp_audit.h"
#include "sandbox_dp/rollout_trace.h"

namespace sandbox_dp {
namespace {

ReportId Y(uint64_t n) { return ReportId::FromParts(0, n); }
const Key kK0 = Key::FromParts(0, 1);
const Key kK1 = Key::FromParts(0, 2);

MsrParams Params(int64_t a1, int64_t a0, double eps_star, double delta_star) {
  MsrParams p;
  p.bounds = ContributionBounds{a1, a0};
  p.eps_star = eps_star;
  p.delta_star = delta_star;
  p.key_universe = {kK0, kK1};
  return p;
}

MeasurementDatabase AraDb() {
  return MeasurementDatabase{
      DbFlavor::kAra,
      {MsrRecord{UnitId::Source("s1"), Y(1), std::nullopt},
       MsrRecord{UnitId::Source("s1"), Y(2), std::nullopt},
       MsrRecord{UnitId::Source("s2"), Y(3), std::nullopt}}};
}

MsrQuery Query(std::set<ReportId> ys, int64_t value, double eps, double delta) {
  MsrQuery q;
  q.eps = eps;
  q.delta = delta;
  q.reports = std::move(ys);
  q.f = [value](const MsrRecord& r) {
    return Contribution{r.y == Y(3) ? kK1 : kK0, value};
  };
  return q;
}

TEST(MsrMechanismTest, NoiselessSumsAndBounding) {
  MsrParams p = Params(5, 1, 10.0, 0.0);
  p.noise = NoiseMode::kDisabledForAudit;
  auto m = MsrMechanism::Create(p);
  ASSERT_TRUE(m.ok());
  Rng rng(1);
  // s1 has two records but A0 = 1: only Y(1) is admitted for it.
  MsrResponse r = m->Step(AraDb(), Query({Y(1), Y(2), Y(3)}, 4, 1.0, 0.0), rng);
  ASSERT_FALSE(r.aborted);
  ASSERT_EQ(r.released.size(), 2u);
  EXPECT_EQ(r.released[0], (SummaryEntry{kK0, 4}));
  EXPECT_EQ(r.released[1], (SummaryEntry{kK1, 4}));
  EXPECT_EQ(m->usage(UnitId::Source("s1")).contributions, 1);
}

TEST(MsrMechanismTest, ContributionsFixedAtFirstAdmission) {
  MsrParams p = Params(10, 2, 10.0, 0.0);
  p.noise = NoiseMode::kDisabledForAudit;
  auto m = MsrMechanism::Create(p);
  Rng rng(1);
  m->Step(AraDb(), Query({Y(1)}, 3, 1.0, 0.0), rng);
  // A new f does not change what Y(1) already contributes.
  MsrResponse r = m->Step(AraDb(), Query({Y(1)}, 9, 1.0, 0.0), rng);
  EXPECT_EQ(r.released[0], (SummaryEntry{kK0, 3}));
}

TEST(MsrMechanismTest, AbortsPastBudgetAndKeepsAborting) {
  MsrParams p = Params(10, 2, 1.0, 0.0);
  p.noise = NoiseMode::kDisabledForAudit;
  auto m = MsrMechanism::Create(p);
  Rng rng(1);
  EXPECT_FALSE(m->Step(AraDb(), Query({Y(1)}, 1, 0.6, 0.0), rng).aborted);
  EXPECT_TRUE(m->Step(AraDb(), Query({Y(1)}, 1, 0.6, 0.0), rng).aborted);
  EXPECT_TRUE(m->Step(AraDb(), Query({Y(1), Y(2)}, 1, 0.5, 0.0), rng).aborted);
  EXPECT_FALSE(m->Step(AraDb(), Query({Y(1)}, 1, 0.4, 0.0), rng).aborted);
  EXPECT_EQ(m->budget(Y(1)).eps, BudgetAmount::FromInteger(1));
  EXPECT_TRUE(m->budget(Y(2)).eps.is_zero());
}

TEST(MsrMechanismTest, InvalidQueriesAbort) {
  auto m = MsrMechanism::Create(Params(10, 2, 1.0, 0.1));
  Rng rng(1);
  EXPECT_TRUE(m->Step(AraDb(), Query({Y(1)}, 1, 0.0, 0.0), rng).aborted);
  EXPECT_TRUE(m->Step(AraDb(), Query({Y(1)}, 1, 1.0, 2.0), rng).aborted);
  MsrQuery no_f = Query({Y(1)}, 1, 0.5, 0.0);
  no_f.f = nullptr;
  EXPECT_TRUE(m->Step(AraDb(), no_f, rng).aborted);
  EXPECT_TRUE(m->trace().empty());
}

TEST(MsrMechanismTest, StepOutcomesSumToOne) {
  auto m = MsrMechanism::Create(Params(2, 2, 1.0, 0.1));
  auto branches = m->StepOutcomes(AraDb(), Query({Y(1), Y(3)}, 2, 0.5, 0.05));
  ASSERT_TRUE(branches.ok());
  long double total = 0.0L;
  for (const auto& b : *branches) total += b.probability;
  EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-15);
}

TEST(MsrMechanismTest, StepOutcomesNeedTruncation) {
  auto m = MsrMechanism::Create(Params(2, 2, 1.0, 0.1));
  EXPECT_FALSE(m->StepOutcomes(AraDb(), Query({Y(1)}, 2, 0.5, 0.0)).ok());
}

TEST(RemoveUnitTest, AraMovesToDummy) {
  MeasurementDatabase db = RemoveUnit(AraDb(), RemoveSource{"s1"});
  EXPECT_TRUE(db.records[0].x.dummy);
  EXPECT_TRUE(db.records[1].x.dummy);
  EXPECT_EQ(db.records[2].x, UnitId::Source("s2"));
  EXPECT_EQ(db.records[0].y, Y(1));
  // PAA target on an ARA database matches nothing.
  EXPECT_EQ(RemoveUnit(AraDb(), RemoveDeviceWindow{"s1", 0}), AraDb());
}

TEST(RemoveUnitTest, PaaBlanksStorage) {
  MeasurementDatabase db{
      DbFlavor::kPaa,
      {MsrRecord{UnitId::DeviceWindow("d", 0), Y(1), "seen"},
       MsrRecord{UnitId::DeviceWindow("d", 1), Y(2), "seen"},
       MsrRecord{UnitId::DeviceWindow("d", 2), Y(3), "seen"}}};
  MeasurementDatabase one = RemoveUnit(db, RemoveDeviceWindow{"d", 1});
  EXPECT_EQ(one.records[0].storage, "seen");
  EXPECT_FALSE(one.records[1].storage.has_value());
  EXPECT_TRUE(IsBlank(DbFlavor::kPaa, one.records[1]));
  MeasurementDatabase after = RemoveUnit(db, RemoveDeviceAfter{"d", 0});
  EXPECT_EQ(after.records[0].storage, "seen");
  EXPECT_FALSE(after.records[1].storage.has_value());
  EXPECT_FALSE(after.records[2].storage.has_value());
}

TEST(ComputeRolloutTest, ChargesOnlyRequestedReports) {
  const UnitId x = UnitId::Source("x");
  std::vector<MsrTurnTrace> trace(3);
  trace[0].eps = 1.0;
  trace[0].delta = 0.1;
  trace[0].reports = {Y(1)};
  trace[0].admitted = {AdmittedReport{x, Y(1), Contribution{kK0, 4}},
                       AdmittedReport{x, Y(2), Contribution{kK0, 2}}};
  trace[1].eps = 2.0;
  trace[1].delta = 0.2;
  trace[1].reports = {Y(1), Y(2)};
  trace[1].aborted = true;
  trace[2].eps = 0.5;
  trace[2].delta = 0.0;
  trace[2].reports = {Y(1), Y(2)};
  RolloutAccount acc = ComputeRollout(trace, ContributionBounds{8, 2});
  ASSERT_EQ(acc.per_turn.at(x).size(), 3u);
  EXPECT_DOUBLE_EQ(static_cast<double>(acc.per_turn.at(x)[0].eps), 0.5);
  EXPECT_DOUBLE_EQ(static_cast<double>(acc.per_turn.at(x)[0].delta), 0.05);
  EXPECT_EQ(acc.per_turn.at(x)[1].eps, 0.0L);
  EXPECT_DOUBLE_EQ(static_cast<double>(acc.per_turn.at(x)[2].eps), 0.375);
  EXPECT_DOUBLE_EQ(static_cast<double>(acc.Total(x).eps), 0.875);
}

TEST(ComputeRolloutTest, MechanismTraceStaysWithinCaps) {
  auto m = MsrMechanism::Create(Params(4, 2, 1.0, 0.1));
  Rng rng(2);
  for (int t = 0; t < 6; ++t) {
    m->Step(AraDb(), Query({Y(1), Y(2), Y(3)}, 2, 0.3, 0.03), rng);
  }
  const RolloutAuditReport report = AuditRollout(TraceOf(*m));
  EXPECT_TRUE(report.pass);
  for (const UnitRolloutResult& u : report.units) {
    EXPECT_LE(u.eps, 1.0L + kAuditSlack);
    EXPECT_LE(u.delta, 0.1L + kAuditSlack);
  }
}

TEST(GroupPrivacyTest, DoublingLnTwo) {
  absl::StatusOr<PrivacyPair> g = GroupPrivacy(std::log(2.0), 0.01, 2);
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(g->eps, std::log(4.0));
  EXPECT_EQ(g->delta, 0.03);
}

TEST(GroupPrivacyTest, KOneIsIdentity) {
  for (double eps : {0.1, 1.0, 3.7}) {
    for (double delta : {0.0, 1e-6, 0.2}) {
      absl::StatusOr<PrivacyPair> g = GroupPrivacy(eps, delta, 1);
      ASSERT_TRUE(g.ok());
      EXPECT_EQ(g->eps, eps);
      EXPECT_EQ(g->delta, delta);
    }
  }
}

TEST(GroupPrivacyTest, RejectsBadArguments) {
  EXPECT_FALSE(GroupPrivacy(1.0, 0.1, 0).ok());
  EXPECT_FALSE(GroupPrivacy(0.0, 0.1, 2).ok());
  EXPECT_FALSE(GroupPrivacy(1.0, 1.5, 2).ok());
}

TEST(GradualExpirationTest, UsesWindowDistance) {
  absl::StatusOr<PrivacyPair> g = GradualExpiration(0.5, 0.01, 3, 6);
  ASSERT_TRUE(g.ok());
  EXPECT_DOUBLE_EQ(g->eps, 1.5);
  EXPECT_NEAR(g->delta, 0.01 * std::expm1(1.5) / std::expm1(0.5), 1e-15);
  EXPECT_FALSE(GradualExpiration(0.5, 0.01, 3, 3).ok());
}

TEST(UnitIdTest, ToStringAndOrder) {
  EXPECT_EQ(UnitId::Dummy().ToString(), "<dummy>");
  EXPECT_EQ(UnitId::Source("s").ToString(), "s");
  EXPECT_EQ(UnitId::DeviceWindow("d", 3).ToString(), "d@3");
  EXPECT_LT(UnitId::Source("a"), UnitId::Dummy());
}

TEST(RolloutTraceTest, SerializeParseRoundTrip) {
  auto m = MsrMechanism::Create(Params(4, 2, 1.0, 0.1));
  Rng rng(2);
  m->Step(AraDb(), Query({Y(1), Y(3)}, 2, 0.1, 0.01), rng);
  m->Step(AraDb(), Query({Y(2)}, 2, 0.3, 0.0), rng);
  const RolloutTrace trace = TraceOf(*m);
  absl::StatusOr<RolloutTrace> back = ParseRolloutTrace(SerializeRolloutTrace(trace));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, trace);
  EXPECT_FALSE(ParseRolloutTrace("garbage").ok());
}

TEST(DoubleToStringTest, ShortestRoundTrip) {
  EXPECT_EQ(DoubleToString(0.1), "0.1");
  EXPECT_EQ(*DoubleFromString(DoubleToString(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_FALSE(DoubleFromString("x").ok());
}

}  // namespace
}  // namespace sandbox_dp
