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

#include "sandbox_dp/audit_runner.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"
#include "sandbox_dp/dp_audit.h"
#include "sandbox_dp/noise.h"
#include "sandbox_dp/rollout_trace.h"
#include "sandbox_dp/scenario.h"

namespace sandbox_dp {
namespace {

using json = nlohmann::ordered_json;

std::string Compact(const json& j) { return j.dump(); }

// Non-increasing non-negative vectors of length d, sum in [1, l1], at most
// l0 non-zeros.
void CanonicalDiffs(int d, int64_t l1, int64_t l0, std::vector<int64_t>& cur,
                    int64_t sum, std::vector<std::vector<int64_t>>& out) {
  if (static_cast<int>(cur.size()) == d) {
    if (sum >= 1) out.push_back(cur);
    return;
  }
  const int64_t nonzero =
      std::count_if(cur.begin(), cur.end(), [](int64_t c) { return c != 0; });
  const int64_t cap = cur.empty() ? l1 : std::min(cur.back(), l1 - sum);
  for (int64_t c = cap; c >= 0; --c) {
    if (c > 0 && nonzero >= l0) continue;
    cur.push_back(c);
    CanonicalDiffs(d, l1, l0, cur, sum + c, out);
    cur.pop_back();
  }
}

uint64_t HashCombine(uint64_t h, uint64_t v) { return MixSeed(h ^ MixSeed(v)); }

}  // namespace

void AuditSummary::Add(AuditRecord record) {
  if (!record.pass && pass) {
    pass = false;
    first_failure = absl::StrCat(record.check, " ", record.instance);
  }
  records.push_back(std::move(record));
}

void AuditSummary::Append(const std::vector<AuditRecord>& more) {
  for (const AuditRecord& r : more) Add(r);
}

absl::StatusOr<std::vector<AuditRecord>> TdlapGridAudit(const TdlapGrid& grid) {
  std::vector<AuditRecord> out;
  for (int d : grid.dims) {
    for (int64_t l1 : grid.l1) {
      for (int64_t l0 : grid.l0) {
        if (l0 > std::min<int64_t>(d, l1)) continue;
        std::vector<std::vector<int64_t>> diffs;
        std::vector<int64_t> cur;
        CanonicalDiffs(d, l1, l0, cur, 0, diffs);
        for (double eps : grid.eps) {
          for (double delta : grid.delta) {
            for (const std::vector<int64_t>& v : diffs) {
              TdlapInstance inst;
              inst.u.assign(d, 0);
              inst.v = v;
              inst.l1_cap = l1;
              inst.l0_cap = l0;
              inst.eps = eps;
              inst.delta = delta;
              absl::StatusOr<TdlapAuditReport> r = AuditTruncatedDLap(inst);
              if (!r.ok()) return r.status();
              json j{{"d", d},       {"l1", l1},
                     {"l0", l0},     {"eps", DoubleToString(eps)},
                     {"delta", DoubleToString(delta)},
                     {"v", v},       {"tau", r->tau}};
              out.push_back(AuditRecord{"audit_tdlap", Compact(j), r->hockey_stick,
                                        static_cast<long double>(delta),
                                        r->pass});
            }
          }
        }
      }
    }
  }
  return out;
}

absl::StatusOr<std::vector<AuditRecord>> TdlapTailAudit(const TdlapGrid& grid) {
  std::vector<AuditRecord> out;
  std::set<std::pair<int64_t, int64_t>> caps;
  for (int64_t l1 : grid.l1) {
    for (int64_t l0 : grid.l0) {
      if (l0 <= l1) caps.insert({l1, l0});
    }
  }
  for (const auto& [l1, l0] : caps) {
    for (double eps : grid.eps) {
      for (double delta : grid.delta) {
        const double a = eps / static_cast<double>(l1);
        const long double minimum =
            std::log(1.0L / static_cast<long double>(delta)) /
                static_cast<long double>(a) +
            static_cast<long double>(l1);
        absl::StatusOr<std::optional<int64_t>> tau =
            ComputeTau(l1, l0, eps, delta);
        if (!tau.ok()) return tau.status();
        std::vector<std::pair<std::string, int64_t>> taus = {
            {"compute_tau", tau->value()},
            {"minimal", static_cast<int64_t>(std::ceil(minimum - 1e-12L))}};
        for (const auto& [which, t] : taus) {
          if (static_cast<long double>(t) < minimum - 1e-9L) continue;
          absl::StatusOr<DLapParam> p = DLapParam::Create(a, t);
          if (!p.ok()) return p.status();
          absl::StatusOr<long double> tail = TruncatedDLapTail(*p, l1);
          if (!tail.ok()) return tail.status();
          json j{{"l1", l1},
                 {"l0", l0},
                 {"eps", DoubleToString(eps)},
                 {"delta", DoubleToString(delta)},
                 {"tau", t},
                 {"tau_source", which}};
          out.push_back(AuditRecord{
              "audit_tdlap_tail", Compact(j), *tail, static_cast<long double>(delta),
              *tail <= static_cast<long double>(delta) + kAuditSlack});
        }
      }
    }
  }
  return out;
}

RandomEventSource RandomEventSourceFor(Rng& rng, int64_t max_outputs) {
  for (;;) {
    RandomEventSource out;
    const int entries = 1 + static_cast<int>(rng.UniformInt(2));
    std::set<int> used;
    for (int e = 0; e < entries; ++e) {
      TriggerSpecEntry entry;
      do {
        entry.trig_data = static_cast<int>(rng.UniformInt(kTriggerDataValues));
      } while (!used.insert(entry.trig_data).second);
      const int windows = 1 + static_cast<int>(rng.UniformInt(3));
      std::set<Tick> offsets;
      while (static_cast<int>(offsets.size()) < windows) {
        offsets.insert(1 + static_cast<Tick>(rng.UniformInt(8)));
      }
      entry.windows.assign(offsets.begin(), offsets.end());
      const int buckets = 1 + static_cast<int>(rng.UniformInt(3));
      int64_t b = 0;
      for (int i = 0; i < buckets; ++i) {
        b += 1 + static_cast<int64_t>(rng.UniformInt(10));
        entry.buckets.push_back(b);
      }
      out.spec.entries.push_back(std::move(entry));
    }
    out.max_reports = 1 + static_cast<int>(rng.UniformInt(3));
    absl::StatusOr<OutputSet> o =
        OutputSet::Enumerate(out.spec, out.max_reports, max_outputs);
    if (o.ok() && o->size() >= 2 && static_cast<int64_t>(o->size()) <= max_outputs) {
      return out;
    }
  }
}

namespace {

using MerAdversary = Adversary<MerMechanism>;

const UnitId& UnitX() {
  static const UnitId* x = new UnitId(UnitId::Source("x"));
  return *x;
}
const UnitId& UnitY() {
  static const UnitId* y = new UnitId(UnitId::Source("y"));
  return *y;
}

uint64_t HistoryHash(absl::Span<const MerMechanism::Response> history) {
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const MerMechanism::Response& r : history) {
    for (const auto& [x, counts] : r) {
      h = HashCombine(h, StableHash(x.ToString()));
      for (int c : counts) h = HashCombine(h, static_cast<uint64_t>(c) + 1);
    }
  }
  return h;
}

bool AnyReport(const MerMechanism::Response& r, const UnitId& x) {
  auto it = r.find(x);
  if (it == r.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [](int c) { return c > 0; });
}

size_t MaxSteps(const MerParams& params) {
  size_t n = 0;
  for (const auto& [x, o] : params.outputs) n = std::max(n, o->num_steps());
  return n;
}

// Random events for unit x spread over [0, last window].
std::vector<EventRecord> BaseEvents(const UnitId& x, const OutputSet& o,
                                    Rng rng, int count) {
  std::vector<EventRecord> out;
  const Tick last = o.step_offsets().empty() ? 1 : o.step_offsets().back();
  for (int i = 0; i < count; ++i) {
    EventRecord r;
    r.x = x;
    r.trig_id = absl::StrCat(x.ToString(), "-t", i);
    // Mostly listed trigger data, sometimes not.
    if (!o.spec().entries.empty() && rng.UniformInt(5) != 0) {
      r.trig_data = o.spec().entries[rng.UniformInt(o.spec().entries.size())]
                        .trig_data;
    } else {
      r.trig_data = static_cast<int>(rng.UniformInt(kTriggerDataValues));
    }
    r.value = 1 + static_cast<int64_t>(rng.UniformInt(30));
    r.offset = static_cast<Tick>(rng.UniformInt(static_cast<uint64_t>(last) + 1));
    out.push_back(std::move(r));
  }
  return out;
}

int FirstTrigData(const OutputSet& o) {
  return o.spec().entries.empty() ? 0 : o.spec().entries[0].trig_data;
}

}  // namespace

std::vector<Adversary<MerMechanism>> ScriptedEventAdversaries(
    const MerParams& params, uint64_t seed) {
  auto shared = std::make_shared<const MerParams>(params);
  const size_t steps = MaxSteps(params);
  Rng rng(seed);
  const OutputSet& ox = *params.outputs.at(UnitX());
  const OutputSet& oy = *params.outputs.at(UnitY());
  std::vector<EventRecord> base;
  for (EventRecord& r : BaseEvents(UnitX(), ox, rng.Fork("x"), 4)) {
    base.push_back(std::move(r));
  }
  for (EventRecord& r : BaseEvents(UnitY(), oy, rng.Fork("y"), 3)) {
    base.push_back(std::move(r));
  }

  std::vector<MerAdversary> out;

  // Everything up front, noiseless queries, runs every step.
  out.push_back([shared, steps, base](absl::Span<const MerMechanism::Response> h)
                    -> std::optional<Turn<MerMechanism>> {
    if (h.size() >= steps) return std::nullopt;
    return Turn<MerMechanism>{EventDatabase{base},
                              NoiselessMerQuery(*shared, h.size())};
  });

  // Adds a large conversion for x after each step where x reported, and a
  // small one for y otherwise.
  out.push_back([shared, steps, base](absl::Span<const MerMechanism::Response> h)
                    -> std::optional<Turn<MerMechanism>> {
    if (h.size() >= steps) return std::nullopt;
    EventDatabase db{base};
    const OutputSet& ox = *shared->outputs.at(UnitX());
    const OutputSet& oy = *shared->outputs.at(UnitY());
    for (size_t j = 0; j < h.size(); ++j) {
      const bool hit = AnyReport(h[j], UnitX());
      const UnitId& who = hit ? UnitX() : UnitY();
      const OutputSet& o = hit ? ox : oy;
      const Tick at = j < o.num_steps() ? o.step_offsets()[j] + 1 : 0;
      db.records.push_back(EventRecord{who, absl::StrCat("react-", j),
                                       FirstTrigData(o), hit ? 100 : 3, at});
    }
    return Turn<MerMechanism>{std::move(db), NoiselessMerQuery(*shared, h.size())};
  });

  // Queries that ignore the client logic: a member chosen from the history
  // and the number of events.
  out.push_back([shared, steps, base](absl::Span<const MerMechanism::Response> h)
                    -> std::optional<Turn<MerMechanism>> {
    if (h.size() >= steps) return std::nullopt;
    const uint64_t hh = HistoryHash(h);
    MerMechanism::Query q;
    for (const auto& [x, o] : shared->outputs) {
      const size_t step = h.size();
      q[x] = [o = o, hh, step](absl::Span<const EventRecord> events) {
        const size_t pick =
            HashCombine(hh, events.size()) % o->members().size();
        return o->Project(o->members()[pick], step);
      };
    }
    return Turn<MerMechanism>{EventDatabase{base}, std::move(q)};
  });

  // Stops as soon as x reports anything.
  out.push_back([shared, steps, base](absl::Span<const MerMechanism::Response> h)
                    -> std::optional<Turn<MerMechanism>> {
    if (h.size() >= steps) return std::nullopt;
    if (!h.empty() && AnyReport(h.back(), UnitX())) return std::nullopt;
    return Turn<MerMechanism>{EventDatabase{base},
                              NoiselessMerQuery(*shared, h.size())};
  });

  // Moves y's events to x when y stays silent, and grows the database by
  // one event per step.
  out.push_back([shared, steps, base](absl::Span<const MerMechanism::Response> h)
                    -> std::optional<Turn<MerMechanism>> {
    if (h.size() >= steps) return std::nullopt;
    EventDatabase db{base};
    const bool migrate = !h.empty() && !AnyReport(h.back(), UnitY());
    if (migrate) {
      for (EventRecord& r : db.records) {
        if (r.x == UnitY()) r.x = UnitX();
      }
    }
    const uint64_t hh = HistoryHash(h);
    for (size_t j = 0; j < h.size(); ++j) {
      const UnitId& who = (HashCombine(hh, j) & 1) ? UnitX() : UnitY();
      const OutputSet& o = *shared->outputs.at(who);
      db.records.push_back(EventRecord{
          who, absl::StrCat("grow-", j), FirstTrigData(o),
          static_cast<int64_t>(1 + HashCombine(hh, j + 17) % 40),
          static_cast<Tick>(HashCombine(hh, j + 31) % 9)});
    }
    return Turn<MerMechanism>{std::move(db), NoiselessMerQuery(*shared, h.size())};
  });
  return out;
}

absl::StatusOr<std::vector<AuditRecord>> EventIrrAudit(
    const EventIrrSuite& suite) {
  std::vector<AuditRecord> out;
  Rng rng(suite.seed);
  for (int s = 0; s < suite.specs; ++s) {
    Rng spec_rng = rng.Fork(static_cast<uint64_t>(s));
    RandomEventSource sx = RandomEventSourceFor(spec_rng, suite.max_outputs);
    RandomEventSource sy = RandomEventSourceFor(spec_rng, 6);
    absl::StatusOr<OutputSet> ox = OutputSet::Enumerate(sx.spec, sx.max_reports);
    absl::StatusOr<OutputSet> oy = OutputSet::Enumerate(sy.spec, sy.max_reports);
    if (!ox.ok()) return ox.status();
    if (!oy.ok()) return oy.status();
    MerParams params;
    params.eps = suite.eps[static_cast<size_t>(s) % suite.eps.size()];
    params.outputs[UnitX()] = std::make_shared<const OutputSet>(*std::move(ox));
    params.outputs[UnitY()] = std::make_shared<const OutputSet>(*std::move(oy));
    absl::StatusOr<MerMechanism> mech = MerMechanism::Create(params);
    if (!mech.ok()) return mech.status();

    const std::vector<MerAdversary> adversaries =
        ScriptedEventAdversaries(params, spec_rng.NextU64());
    for (size_t a = 0; a < adversaries.size(); ++a) {
      absl::StatusOr<FiniteDistribution<Transcript<MerMechanism>>> pd =
          ExactTranscriptDistribution(*mech, adversaries[a]);
      if (!pd.ok()) return pd.status();
      for (const UnitId& removed : {UnitX(), UnitY()}) {
        MerAdversary neighbour = TransformDatabases<MerMechanism>(
            adversaries[a], [removed](const EventDatabase& db) {
              return RemoveEventUnit(db, removed);
            });
        absl::StatusOr<FiniteDistribution<Transcript<MerMechanism>>> pn =
            ExactTranscriptDistribution(*mech, neighbour);
        if (!pn.ok()) return pn.status();
        const long double hs = HockeyStickDelta(*pd, *pn, params.eps);
        const long double mass_error = std::max(std::fabs(TotalMass(*pd) - 1.0L),
                                                std::fabs(TotalMass(*pn) - 1.0L));
        json j{{"spec", s},
               {"adversary", a},
               {"removed", removed.ToString()},
               {"eps", DoubleToString(params.eps)},
               {"outputs_x", params.outputs.at(UnitX())->size()},
               {"outputs_y", params.outputs.at(UnitY())->size()}};
        out.push_back(AuditRecord{"audit_event_irr", Compact(j), hs, kAuditSlack,
                                  hs <= kAuditSlack && mass_error <= kAuditSlack});
      }
    }
  }
  return out;
}

namespace {

struct RolloutWorld {
  DbFlavor flavor;
  std::vector<UnitId> units;
  std::vector<Key> keys;
  ContributionBounds bounds;
};

uint64_t HashRecord(const MsrRecord& r) {
  uint64_t h = StableHash(r.x.ToString());
  h = HashCombine(h, absl::Uint128Low64(r.y.bits()));
  if (r.storage.has_value()) h = HashCombine(h, StableHash(*r.storage));
  return h;
}

uint64_t MsrHistoryHash(absl::Span<const MsrResponse> history) {
  uint64_t h = 0x243f6a8885a308d3ULL;
  for (const MsrResponse& r : history) {
    h = HashCombine(h, r.aborted ? 1 : 2);
    for (const SummaryEntry& e : r.released) {
      h = HashCombine(h, absl::Uint128Low64(e.key.bits()));
      h = HashCombine(h, static_cast<uint64_t>(e.value));
    }
  }
  return h;
}

MsrRecord RandomRecord(const RolloutWorld& w, Rng& rng) {
  MsrRecord r;
  r.y = rng.NextReportId();
  r.x = w.units[rng.UniformInt(w.units.size())];
  if (w.flavor == DbFlavor::kPaa) {
    static const char* kStates[] = {"a", "b", "c"};
    if (rng.UniformInt(4) != 0) r.storage = kStates[rng.UniformInt(3)];
  } else if (rng.UniformInt(6) == 0) {
    r.x = UnitId::Dummy();
  }
  return r;
}

// Contribution function of one turn; changes with the turn's variant.
std::function<Contribution(const MsrRecord&)> TurnFunction(
    const RolloutWorld& w, uint64_t variant) {
  return [keys = w.keys, a1 = w.bounds.contribution_budget,
          variant](const MsrRecord& r) {
    const uint64_t h = HashCombine(HashRecord(r), variant);
    return Contribution{keys[h % keys.size()],
                        static_cast<int64_t>((h >> 8) %
                                             static_cast<uint64_t>(a1 + 1))};
  };
}

}  // namespace

absl::StatusOr<RolloutRun> RunRandomRolloutScenario(uint64_t seed) {
  Rng rng(seed);
  RolloutWorld w;
  w.flavor = rng.UniformInt(2) == 0 ? DbFlavor::kAra : DbFlavor::kPaa;
  w.bounds.contribution_budget = int64_t{4} << rng.UniformInt(3);
  w.bounds.sparsity_budget = 1 + static_cast<int64_t>(rng.UniformInt(3));
  const int key_count = 2 + static_cast<int>(rng.UniformInt(2));
  for (int k = 0; k < key_count; ++k) {
    w.keys.push_back(Key::FromParts(0, static_cast<uint64_t>(k + 1)));
  }
  const int unit_count = 2 + static_cast<int>(rng.UniformInt(3));
  for (int u = 0; u < unit_count; ++u) {
    if (w.flavor == DbFlavor::kAra) {
      w.units.push_back(UnitId::Source(absl::StrCat("s", u)));
    } else {
      w.units.push_back(UnitId::DeviceWindow(absl::StrCat("d", u % 2), u / 2));
    }
  }

  MsrParams params;
  params.bounds = w.bounds;
  params.eps_star = rng.UniformInt(2) == 0 ? 1.0 : 2.0;
  params.delta_star = rng.UniformInt(2) == 0 ? 0.1 : 0.2;
  params.key_universe = w.keys;
  absl::StatusOr<MsrMechanism> mech_d = MsrMechanism::Create(params);
  if (!mech_d.ok()) return mech_d.status();
  MsrMechanism mech_n = *mech_d;

  MeasurementDatabase db{w.flavor, {}};
  const int initial = 4 + static_cast<int>(rng.UniformInt(5));
  Rng data_rng = rng.Fork("data");
  for (int i = 0; i < initial; ++i) db.records.push_back(RandomRecord(w, data_rng));

  const UnitId target = w.units[rng.UniformInt(w.units.size())];
  RemovalTarget removal;
  if (w.flavor == DbFlavor::kAra) {
    removal = RemoveSource{target.name};
  } else {
    removal = RemoveDeviceWindow{target.name, *target.window};
  }

  static const double kEps[] = {0.25, 0.5, 1.0};
  static const double kDelta[] = {0.0, 0.01, 0.05};
  const int turns = 2 + static_cast<int>(rng.UniformInt(4));
  std::vector<MsrResponse> history;
  RolloutRun run;
  run.removed = target.ToString();
  Rng noise_d = rng.Fork("noise-d");
  Rng noise_n = rng.Fork("noise-n");
  for (int t = 0; t < turns; ++t) {
    // The adversary sees only the D-world responses.
    const uint64_t hh = HashCombine(MsrHistoryHash(history), seed);
    Rng turn_rng(hh);
    const int added = static_cast<int>(turn_rng.UniformInt(3));
    for (int i = 0; i < added; ++i) db.records.push_back(RandomRecord(w, turn_rng));
    MsrQuery q;
    q.eps = kEps[turn_rng.UniformInt(3)];
    q.delta = kDelta[turn_rng.UniformInt(3)];
    for (const MsrRecord& r : db.records) {
      if (turn_rng.UniformInt(10) < 6) q.reports.insert(r.y);
    }
    q.f = TurnFunction(w, turn_rng.NextU64());

    const MeasurementDatabase neighbour = RemoveUnit(db, removal);
    MsrResponse rd = mech_d->Step(db, q, noise_d);
    MsrResponse rn = mech_n.Step(neighbour, q, noise_n);
    run.aborts_d.push_back(rd.aborted);
    run.aborts_neighbour.push_back(rn.aborted);
    history.push_back(std::move(rd));
  }
  run.trace_d = TraceOf(*mech_d);
  run.trace_neighbour = TraceOf(mech_n);
  return run;
}

absl::StatusOr<std::vector<AuditRecord>> RolloutAudit(const RolloutSuite& suite) {
  std::vector<AuditRecord> out;
  for (int s = 0; s < suite.scenarios; ++s) {
    const uint64_t seed = HashCombine(suite.seed, static_cast<uint64_t>(s));
    absl::StatusOr<RolloutRun> run = RunRandomRolloutScenario(seed);
    if (!run.ok()) return run.status();
    for (const auto& [world, trace] :
         {std::pair<const char*, const RolloutTrace*>{"d", &run->trace_d},
          {"neighbour", &run->trace_neighbour}}) {
      // Serialize and parse back so the audited trace is the exported one.
      absl::StatusOr<RolloutTrace> parsed =
          ParseRolloutTrace(SerializeRolloutTrace(*trace));
      if (!parsed.ok()) return parsed.status();
      const RolloutAuditReport report = AuditRollout(*parsed);
      long double worst = 0.0L;
      for (const UnitRolloutResult& u : report.units) {
        worst = std::max({worst, u.eps / static_cast<long double>(parsed->eps_star),
                          parsed->delta_star > 0
                              ? u.delta / static_cast<long double>(parsed->delta_star)
                              : u.delta});
      }
      json j{{"scenario", s}, {"world", world}, {"turns", trace->turns.size()}};
      if (report.first_failure.has_value()) {
        j["failing_unit"] = report.first_failure->ToString();
      }
      out.push_back(AuditRecord{"audit_rollout", Compact(j), worst, 1.0L, report.pass});
    }
    const bool same = run->aborts_d == run->aborts_neighbour;
    int64_t aborts = std::count(run->aborts_d.begin(), run->aborts_d.end(), true);
    json j{{"scenario", s}, {"removed", run->removed}, {"aborts", aborts}};
    out.push_back(AuditRecord{"audit_abort_pattern", Compact(j), same ? 0.0L : 1.0L,
                              0.0L, same});
  }
  return out;
}

absl::StatusOr<std::vector<AuditRecord>> SmallMsrExactAudit() {
  MsrParams params;
  params.bounds = ContributionBounds{2, 2};
  params.eps_star = 1.0;
  params.delta_star = 0.1;
  const Key k0 = Key::FromParts(0, 1);
  const Key k1 = Key::FromParts(0, 2);
  params.key_universe = {k0, k1};
  absl::StatusOr<MsrMechanism> mech = MsrMechanism::Create(params);
  if (!mech.ok()) return mech.status();

  const ReportId y1 = ReportId::FromParts(0, 0x11);
  const ReportId y2 = ReportId::FromParts(0, 0x22);
  const MeasurementDatabase db{
      DbFlavor::kAra,
      {MsrRecord{UnitId::Source("s1"), y1, std::nullopt},
       MsrRecord{UnitId::Source("s2"), y2, std::nullopt}}};

  // Turn 1 asks for both reports; turn 2 narrows to y1 or changes the
  // contribution function depending on what turn 1 released.
  Adversary<MsrMechanism> adversary =
      [=](absl::Span<const MsrResponse> h) -> std::optional<Turn<MsrMechanism>> {
    if (h.size() >= 2) return std::nullopt;
    MsrQuery q;
    q.eps = 0.5;
    q.delta = 0.05;
    if (h.empty()) {
      q.reports = {y1, y2};
      q.f = [=](const MsrRecord& r) {
        return r.y == y1 ? Contribution{k0, 2} : Contribution{k1, 1};
      };
    } else {
      bool k0_released = false;
      for (const SummaryEntry& e : h[0].released) k0_released |= e.key == k0;
      if (k0_released) {
        q.reports = {y1};
        q.f = [=](const MsrRecord&) { return Contribution{k1, 2}; };
      } else {
        q.reports = {y1, y2};
        q.f = [=](const MsrRecord& r) {
          return r.y == y2 ? Contribution{k0, 2} : Contribution{k0, 1};
        };
      }
    }
    return Turn<MsrMechanism>{db, std::move(q)};
  };

  std::vector<AuditRecord> out;
  absl::StatusOr<FiniteDistribution<Transcript<MsrMechanism>>> pd =
      ExactTranscriptDistribution(*mech, adversary);
  if (!pd.ok()) return pd.status();
  for (const std::string& src : {std::string("s1"), std::string("s2")}) {
    Adversary<MsrMechanism> neighbour = TransformDatabases<MsrMechanism>(
        adversary, [src](const MeasurementDatabase& d) {
          return RemoveUnit(d, RemoveSource{src});
        });
    absl::StatusOr<FiniteDistribution<Transcript<MsrMechanism>>> pn =
        ExactTranscriptDistribution(*mech, neighbour);
    if (!pn.ok()) return pn.status();
    const long double hs = HockeyStickDelta(*pd, *pn, params.eps_star);
    json j{{"removed", src},
           {"eps_star", DoubleToString(params.eps_star)},
           {"delta_star", DoubleToString(params.delta_star)},
           {"outcomes_d", pd->size()},
           {"outcomes_neighbour", pn->size()}};
    out.push_back(AuditRecord{
        "audit_msr_exact", Compact(j), hs, static_cast<long double>(params.delta_star),
        hs <= static_cast<long double>(params.delta_star) + kAuditSlack});
  }
  return out;
}

namespace {

std::vector<json> JsonLines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

// Number of expected objects not matched field by field, plus the length
// difference.
int64_t Mismatches(const std::vector<json>& actual, const json& expected) {
  int64_t bad = 0;
  const size_t n = std::max(actual.size(), expected.size());
  for (size_t i = 0; i < n; ++i) {
    if (i >= actual.size() || i >= expected.size()) {
      ++bad;
      continue;
    }
    for (const auto& [k, v] : expected[i].items()) {
      if (!actual[i].contains(k) || actual[i][k] != v) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

}  // namespace

absl::StatusOr<std::vector<AuditRecord>> ScenarioExpectationAudit(
    const std::string& scenario_path, std::string_view expected_reports_json,
    std::string_view expected_summaries_json, const AuditOptions& options) {
  std::ifstream in(scenario_path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", scenario_path));
  std::stringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<Scenario> sc = ParseScenario(buf.str());
  if (!sc.ok()) return sc.status();
  SimulationOptions sim;
  if (options.disable_noise) sim.noise = NoiseMode::kDisabledForAudit;
  absl::StatusOr<SimulationOutput> out = RunSimulation(*sc, std::nullopt, sim);
  if (!out.ok()) return out.status();

  std::vector<AuditRecord> records;
  const std::pair<const char*, std::string_view> parts[] = {
      {"reports", expected_reports_json},
      {"summaries", expected_summaries_json}};
  for (const auto& [what, expected_text] : parts) {
    if (expected_text.empty()) continue;
    const json expected = json::parse(expected_text, nullptr, false);
    if (expected.is_discarded() || !expected.is_array()) {
      return absl::InvalidArgumentError(
          absl::StrCat("expected ", what, " must be a JSON list"));
    }
    const std::vector<json> actual = JsonLines(
        std::string(what) == "reports" ? out->reports_jsonl : out->summaries_jsonl);
    const int64_t bad = Mismatches(actual, expected);
    json j{{"path", scenario_path},
           {"part", what},
           {"noise", options.disable_noise ? "off" : "on"},
           {"expected", expected.size()},
           {"actual", actual.size()}};
    records.push_back(AuditRecord{"audit_scenario", Compact(j),
                                  static_cast<long double>(bad), 0.0L, bad == 0});
  }
  return records;
}

namespace {

absl::StatusOr<std::vector<double>> RealList(const json& j, const char* name,
                                             std::vector<double> fallback) {
  if (!j.contains(name)) return fallback;
  if (!j[name].is_array()) {
    return absl::InvalidArgumentError(absl::StrCat("\"", name, "\" must be a list"));
  }
  std::vector<double> out;
  for (const json& v : j[name]) {
    if (!v.is_string()) {
      return absl::InvalidArgumentError(
          absl::StrCat("\"", name, "\" entries must be decimal strings"));
    }
    absl::StatusOr<double> d = DoubleFromString(v.get<std::string>());
    if (!d.ok()) return d.status();
    out.push_back(*d);
  }
  return out;
}

template <typename T>
absl::StatusOr<std::vector<T>> IntList(const json& j, const char* name,
                                       std::vector<T> fallback) {
  if (!j.contains(name)) return fallback;
  if (!j[name].is_array()) {
    return absl::InvalidArgumentError(absl::StrCat("\"", name, "\" must be a list"));
  }
  std::vector<T> out;
  for (const json& v : j[name]) {
    if (!v.is_number_integer()) {
      return absl::InvalidArgumentError(
          absl::StrCat("\"", name, "\" entries must be integers"));
    }
    out.push_back(v.get<T>());
  }
  return out;
}

absl::StatusOr<TdlapGrid> ParseGrid(const json& j) {
  TdlapGrid g;
  absl::StatusOr<std::vector<int>> dims = IntList<int>(j, "dims", g.dims);
  absl::StatusOr<std::vector<int64_t>> l1 = IntList<int64_t>(j, "l1", g.l1);
  absl::StatusOr<std::vector<int64_t>> l0 = IntList<int64_t>(j, "l0", g.l0);
  absl::StatusOr<std::vector<double>> eps = RealList(j, "eps", g.eps);
  absl::StatusOr<std::vector<double>> delta = RealList(j, "delta", g.delta);
  for (const absl::Status& s :
       {dims.status(), l1.status(), l0.status(), eps.status(), delta.status()}) {
    if (!s.ok()) return s;
  }
  g.dims = *dims;
  g.l1 = *l1;
  g.l0 = *l0;
  g.eps = *eps;
  g.delta = *delta;
  return g;
}

std::string ReadAll(const std::string& path, bool* ok) {
  std::ifstream in(path, std::ios::binary);
  *ok = static_cast<bool>(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string Resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || path[0] == '/' || base_dir.empty()) return path;
  return base_dir + "/" + path;
}

absl::StatusOr<std::vector<AuditRecord>> RunCheck(const json& c,
                                                  const std::string& base_dir,
                                                  const AuditOptions& options) {
  if (!c.is_object() || !c.contains("type") || !c["type"].is_string()) {
    return absl::InvalidArgumentError("each check needs a string \"type\"");
  }
  const std::string type = c["type"].get<std::string>();
  if (type == "tdlap") {
    TdlapInstance inst;
    absl::StatusOr<std::vector<int64_t>> u = IntList<int64_t>(c, "u", {});
    absl::StatusOr<std::vector<int64_t>> v = IntList<int64_t>(c, "v", {});
    absl::StatusOr<std::vector<double>> ed = RealList(c, "eps_delta", {});
    if (!u.ok()) return u.status();
    if (!v.ok()) return v.status();
    if (!ed.ok()) return ed.status();
    if (ed->size() != 2) {
      return absl::InvalidArgumentError("tdlap needs \"eps_delta\": [eps, delta]");
    }
    inst.u = *u;
    inst.v = *v;
    inst.eps = (*ed)[0];
    inst.delta = (*ed)[1];
    if (c.contains("l1_cap")) inst.l1_cap = c["l1_cap"].get<int64_t>();
    if (c.contains("l0_cap")) inst.l0_cap = c["l0_cap"].get<int64_t>();
    if (c.contains("tau")) inst.tau_override = c["tau"].get<int64_t>();
    absl::StatusOr<TdlapAuditReport> r = AuditTruncatedDLap(inst);
    if (!r.ok()) return r.status();
    json j{{"u", inst.u},
           {"v", inst.v},
           {"eps", DoubleToString(inst.eps)},
           {"delta", DoubleToString(inst.delta)},
           {"tau", r->tau}};
    return std::vector<AuditRecord>{AuditRecord{
        "audit_tdlap", Compact(j), r->hockey_stick,
        static_cast<long double>(inst.delta), r->pass}};
  }
  if (type == "tdlap_grid" || type == "tdlap_tail") {
    absl::StatusOr<TdlapGrid> g = ParseGrid(c);
    if (!g.ok()) return g.status();
    return type == "tdlap_grid" ? TdlapGridAudit(*g) : TdlapTailAudit(*g);
  }
  if (type == "dlap_untruncated") {
    absl::StatusOr<std::vector<int64_t>> u = IntList<int64_t>(c, "u", {});
    absl::StatusOr<std::vector<int64_t>> v = IntList<int64_t>(c, "v", {});
    absl::StatusOr<std::vector<double>> a = RealList(c, "a", {});
    if (!u.ok()) return u.status();
    if (!v.ok()) return v.status();
    if (!a.ok() || a->size() != 1) {
      return absl::InvalidArgumentError("dlap_untruncated needs \"a\": [a]");
    }
    const int64_t window = c.value("window", int64_t{40});
    absl::StatusOr<UntruncatedAuditReport> r =
        AuditUntruncatedDLap(*u, *v, (*a)[0], window);
    if (!r.ok()) return r.status();
    json j{{"u", *u}, {"v", *v}, {"a", DoubleToString((*a)[0])},
           {"window", window},
           {"tail_mass", DoubleToString(static_cast<double>(r->tail_mass))}};
    return std::vector<AuditRecord>{AuditRecord{
        "audit_dlap_untruncated", Compact(j), r->max_log_ratio,
        static_cast<long double>(r->eps), r->pass}};
  }
  if (type == "event_irr") {
    EventIrrSuite suite;
    suite.seed = c.value("seed", suite.seed);
    suite.specs = c.value("specs", suite.specs);
    suite.max_outputs = c.value("max_outputs", suite.max_outputs);
    absl::StatusOr<std::vector<double>> eps = RealList(c, "eps", suite.eps);
    if (!eps.ok()) return eps.status();
    suite.eps = *eps;
    return EventIrrAudit(suite);
  }
  if (type == "rollout") {
    RolloutSuite suite;
    suite.seed = c.value("seed", suite.seed);
    suite.scenarios = c.value("scenarios", suite.scenarios);
    return RolloutAudit(suite);
  }
  if (type == "rollout_trace") {
    if (!c.contains("path") || !c["path"].is_string()) {
      return absl::InvalidArgumentError("rollout_trace needs a \"path\"");
    }
    const std::string path = Resolve(base_dir, c["path"].get<std::string>());
    bool ok = false;
    const std::string text = ReadAll(path, &ok);
    if (!ok) return absl::NotFoundError(absl::StrCat("cannot read ", path));
    absl::StatusOr<RolloutTrace> trace = ParseRolloutTrace(text);
    if (!trace.ok()) return trace.status();
    const RolloutAuditReport report = AuditRollout(*trace);
    std::vector<AuditRecord> out;
    for (const UnitRolloutResult& u : report.units) {
      json j{{"path", c["path"]}, {"unit", u.x.ToString()},
             {"eps", DoubleToString(static_cast<double>(u.eps))},
             {"delta", DoubleToString(static_cast<double>(u.delta))}};
      out.push_back(AuditRecord{"audit_rollout_trace", Compact(j), u.eps,
                                static_cast<long double>(trace->eps_star),
                                u.pass});
    }
    return out;
  }
  if (type == "msr_exact") return SmallMsrExactAudit();
  if (type == "scenario") {
    if (!c.contains("path") || !c["path"].is_string()) {
      return absl::InvalidArgumentError("scenario needs a \"path\"");
    }
    if (!c.contains("expect_reports") && !c.contains("expect_summaries")) {
      return absl::InvalidArgumentError(
          "scenario needs \"expect_reports\" or \"expect_summaries\"");
    }
    auto dumped = [&](const char* name) {
      return c.contains(name) ? c[name].dump() : std::string();
    };
    return ScenarioExpectationAudit(
        Resolve(base_dir, c["path"].get<std::string>()),
        dumped("expect_reports"), dumped("expect_summaries"), options);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown check \"", type, "\""));
}

}  // namespace

absl::StatusOr<AuditSummary> RunAuditConfig(std::string_view config_json,
                                            const std::string& base_dir,
                                            const AuditOptions& options) {
  const json doc = json::parse(config_json, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return absl::InvalidArgumentError("audit config is not a JSON object");
  }
  if (doc.value("format", std::string()) != kAuditFormat) {
    return absl::InvalidArgumentError(absl::StrCat(
        "audit config format must be \"", std::string(kAuditFormat), "\""));
  }
  if (!doc.contains("checks") || !doc["checks"].is_array()) {
    return absl::InvalidArgumentError("audit config needs a \"checks\" list");
  }
  AuditSummary summary;
  for (size_t i = 0; i < doc["checks"].size(); ++i) {
    absl::StatusOr<std::vector<AuditRecord>> records;
    try {
      records = RunCheck(doc["checks"][i], base_dir, options);
    } catch (const json::exception& e) {
      records = absl::InvalidArgumentError(e.what());
    }
    if (!records.ok()) {
      return absl::Status(records.status().code(),
                          absl::StrCat("checks[", i, "]: ",
                                       records.status().message()));
    }
    summary.Append(*records);
  }
  return summary;
}

std::string FormatAuditReport(const AuditSummary& summary) {
  std::string out;
  for (const AuditRecord& r : summary.records) {
    json j;
    j["check"] = r.check;
    j["instance"] = json::parse(r.instance);
    j["computed"] = absl::StrFormat("%.6Le", r.computed);
    j["bound"] = absl::StrFormat("%.6Le", r.bound);
    j["verdict"] = r.pass ? "pass" : "fail";
    absl::StrAppend(&out, j.dump(), "\n");
  }
  return out;
}

}  // namespace sandbox_dp
