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

#include <vector>

#include "benchmark/benchmark.h"
#include "sandbox_dp/aggregation_service.h"
#include "sandbox_dp/dp_audit.h"
#include "sandbox_dp/event_mechanism.h"
#include "sandbox_dp/noise.h"
#include "sandbox_dp/random.h"

namespace sandbox_dp {
namespace {

void BM_SampleDLapTruncated(benchmark::State& state) {
  const DLapParam p = *DLapParam::Create(1.0 / 65536.0 * state.range(0), 367341);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(SampleDLap(p, rng));
}
BENCHMARK(BM_SampleDLapTruncated)->Arg(1)->Arg(64);

void BM_SampleDLapUntruncated(benchmark::State& state) {
  const DLapParam p = *DLapParam::Create(1.0 / state.range(0), std::nullopt);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(SampleDLap(p, rng));
}
BENCHMARK(BM_SampleDLapUntruncated)->Arg(1)->Arg(20)->Arg(65536);

void BM_EnumerateOutputs(benchmark::State& state) {
  TriggerSpec spec;
  for (int e = 0; e < state.range(0); ++e) {
    spec.entries.push_back(TriggerSpecEntry{
        e, {kTicksPerDay, 2 * kTicksPerDay, 7 * kTicksPerDay}, {1, 2, 3, 4}});
  }
  for (auto _ : state) {
    absl::StatusOr<OutputSet> o = OutputSet::Enumerate(spec, 3);
    benchmark::DoNotOptimize(o->size());
  }
}
BENCHMARK(BM_EnumerateOutputs)->Arg(1)->Arg(2)->Arg(4);

void BM_LedgerTryCharge(benchmark::State& state) {
  PrivacyBudgetLedger ledger(BudgetAmount::FromInteger(1 << 30),
                             BudgetAmount::FromInteger(1));
  Rng rng(3);
  std::vector<ReportId> ids;
  for (int i = 0; i < state.range(0); ++i) ids.push_back(rng.NextReportId());
  const BudgetAmount eps = BudgetAmount::FromInteger(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ledger.TryCharge(ids, eps, BudgetAmount()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LedgerTryCharge)->Arg(1)->Arg(100)->Arg(10000)->ThreadRange(1, 8);

void BM_AuditTruncatedDLap(benchmark::State& state) {
  TdlapInstance inst;
  inst.u = std::vector<int64_t>(state.range(0), 0);
  inst.v = std::vector<int64_t>(state.range(0), 1);
  inst.eps = 1.0;
  inst.delta = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(AuditTruncatedDLap(inst)->hockey_stick);
  }
}
BENCHMARK(BM_AuditTruncatedDLap)->Arg(1)->Arg(2)->Arg(3);

}  // namespace
}  // namespace sandbox_dp

BENCHMARK_MAIN();
