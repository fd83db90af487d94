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

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"

namespace sandbox_dp {

absl::Status TriggerSpec::Validate() const {
  if (entries.size() > kMaxSpecEntries) {
    return absl::InvalidArgumentError(absl::StrCat(
        "trigger spec has ", entries.size(), " entries; at most ",
        kMaxSpecEntries, " allowed"));
  }
  std::set<int> seen;
  for (const TriggerSpecEntry& e : entries) {
    if (e.trig_data < 0 || e.trig_data >= kTriggerDataValues) {
      return absl::InvalidArgumentError(
          absl::StrCat("trigger data ", e.trig_data, " out of range"));
    }
    if (!seen.insert(e.trig_data).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("trigger data ", e.trig_data, " listed twice"));
    }
    if (e.windows.empty() || e.windows.size() > kMaxReportingWindows) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trigger data ", e.trig_data, " needs 1 to ", kMaxReportingWindows,
          " reporting windows"));
    }
    for (size_t i = 0; i < e.windows.size(); ++i) {
      if (e.windows[i] <= 0 || (i > 0 && e.windows[i] <= e.windows[i - 1])) {
        return absl::InvalidArgumentError(
            absl::StrCat("windows of trigger data ", e.trig_data,
                         " must be positive and strictly increasing"));
      }
    }
    if (e.buckets.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("trigger data ", e.trig_data, " has no buckets"));
    }
    for (size_t i = 0; i < e.buckets.size(); ++i) {
      if (e.buckets[i] <= 0 || (i > 0 && e.buckets[i] <= e.buckets[i - 1])) {
        return absl::InvalidArgumentError(
            absl::StrCat("buckets of trigger data ", e.trig_data,
                         " must be positive and strictly increasing"));
      }
    }
  }
  return absl::OkStatus();
}

std::optional<int> TriggerSpec::EntryFor(int trig_data) const {
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].trig_data == trig_data) return static_cast<int>(i);
  }
  return std::nullopt;
}

SourceCounter::SourceCounter(const TriggerSpec* spec, int max_reports)
    : spec_(spec),
      max_reports_(max_reports),
      value_(spec->entries.size(), 0),
      last_bucket_(spec->entries.size(), 0) {}

void SourceCounter::Add(int entry, int64_t value) { value_[entry] += value; }

std::vector<int64_t> SourceCounter::PassWindow(int entry) {
  std::vector<int64_t> out;
  for (int64_t b : spec_->entries[entry].buckets) {
    if (last_bucket_[entry] < b && b <= value_[entry]) {
      last_bucket_[entry] = b;
      if (reports_sent_ < max_reports_) {
        ++reports_sent_;
        out.push_back(b);
      }
    }
  }
  return out;
}

absl::Status EventLevelClient::CheckTime(Tick t) {
  if (started_ && t < now_) {
    return absl::InvalidArgumentError(
        absl::StrCat("event at tick ", t, " arrives after tick ", now_));
  }
  started_ = true;
  now_ = t;
  return absl::OkStatus();
}

absl::Status EventLevelClient::RegisterSource(EventSource source) {
  if (absl::Status s = source.spec.Validate(); !s.ok()) return s;
  if (source.max_reports < 0) {
    return absl::InvalidArgumentError("max_reports must be non-negative");
  }
  if (source.expiry < source.registered_at) {
    return absl::InvalidArgumentError("source expires before registration");
  }
  for (const State& s : sources_) {
    if (s.source->src_id == source.src_id) {
      return absl::AlreadyExistsError(
          absl::StrCat("source \"", source.src_id, "\" already registered"));
    }
  }
  if (!sources_.empty() && source.seq <= sources_.back().source->seq) {
    return absl::InvalidArgumentError("source seq must increase");
  }
  if (absl::Status s = CheckTime(source.registered_at); !s.ok()) return s;

  auto owned = std::make_unique<EventSource>(std::move(source));
  const EventSource& src = *owned;
  for (size_t e = 0; e < src.spec.entries.size(); ++e) {
    const auto& windows = src.spec.entries[e].windows;
    for (size_t w = 0; w < windows.size(); ++w) {
      pending_.push_back(Pending{src.registered_at + windows[w], src.seq,
                                 static_cast<int>(e), static_cast<int>(w)});
    }
  }
  std::sort(pending_.begin(), pending_.end());
  SourceCounter counter(&src.spec, src.max_reports);
  sources_.push_back(State{std::move(owned), std::move(counter)});
  return absl::OkStatus();
}

bool EventLevelClient::Active(const State& s, Tick now) const {
  return s.source->registered_at <= now && now <= s.source->expiry;
}

std::vector<EventReport> EventLevelClient::Flush(Tick through) {
  std::vector<EventReport> out;
  size_t done = 0;
  for (; done < pending_.size() && pending_[done].deadline <= through; ++done) {
    const Pending& p = pending_[done];
    auto it = std::find_if(sources_.begin(), sources_.end(),
                           [&](const State& s) { return s.source->seq == p.seq; });
    const TriggerSpecEntry& entry = it->source->spec.entries[p.entry];
    for (int64_t b : it->counter.PassWindow(p.entry)) {
      out.push_back(EventReport{it->source->src_id, entry.trig_data, b,
                                p.window, p.deadline});
    }
  }
  pending_.erase(pending_.begin(), pending_.begin() + done);
  return out;
}

absl::StatusOr<std::vector<EventReport>> EventLevelClient::RegisterTrigger(
    const EventTrigger& trigger) {
  if (trigger.trig_data < 0 || trigger.trig_data >= kTriggerDataValues) {
    return absl::InvalidArgumentError(
        absl::StrCat("trigger data ", trigger.trig_data, " out of range"));
  }
  if (absl::Status s = CheckTime(trigger.time); !s.ok()) return s;
  std::vector<EventReport> out = Flush(trigger.time - 1);
  last_attribution_.reset();
  if (trigger.value <= 0) return out;
  for (auto it = sources_.rbegin(); it != sources_.rend(); ++it) {
    const EventSource& src = *it->source;
    if (src.dest != trigger.dest || !Active(*it, trigger.time) ||
        !FiltersMatch(src.filters, trigger.filters)) {
      continue;
    }
    // A source whose spec does not list the trigger data is passed over.
    std::optional<int> entry = src.spec.EntryFor(trigger.trig_data);
    if (!entry.has_value()) continue;
    it->counter.Add(*entry, trigger.value);
    last_attribution_ = src.src_id;
    break;
  }
  return out;
}

absl::StatusOr<std::vector<EventReport>> EventLevelClient::AdvanceTo(Tick now) {
  if (absl::Status s = CheckTime(now); !s.ok()) return s;
  return Flush(now);
}

const SourceCounter* EventLevelClient::counter(std::string_view src_id) const {
  for (const State& s : sources_) {
    if (s.source->src_id == src_id) return &s.counter;
  }
  return nullptr;
}

namespace {

// Tuples of `windows` non-negative counts with sum <= cap.
void EntryOptions(int windows, int cap, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == windows) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int c : cur) used += c;
  for (int c = 0; used + c <= cap; ++c) {
    cur.push_back(c);
    EntryOptions(windows, cap, cur, out);
    cur.pop_back();
  }
}

// Number of tuples of length n with sum <= m, C(m + n, n), saturating.
int64_t CountOptions(int64_t m, int64_t n) {
  long double c = 1.0L;
  for (int64_t i = 1; i <= n; ++i) {
    c = c * static_cast<long double>(m + i) / static_cast<long double>(i);
  }
  if (c > 9.0e18L) return INT64_MAX;
  return static_cast<int64_t>(std::llround(c));
}

}  // namespace

absl::StatusOr<OutputSet> OutputSet::Enumerate(const TriggerSpec& spec,
                                               int max_reports,
                                               int64_t max_size) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  if (max_reports < 0) {
    return absl::InvalidArgumentError("max_reports must be non-negative");
  }
  OutputSet out;
  out.spec_ = spec;
  out.max_reports_ = max_reports;

  std::vector<std::vector<std::vector<int>>> options(spec.entries.size());
  std::vector<size_t> first_slot(spec.entries.size());
  for (size_t e = 0; e < spec.entries.size(); ++e) {
    const TriggerSpecEntry& entry = spec.entries[e];
    first_slot[e] = out.slots_.size();
    for (size_t w = 0; w < entry.windows.size(); ++w) {
      out.slots_.push_back(
          Slot{static_cast<int>(e), static_cast<int>(w), entry.windows[w]});
    }
    const int cap = static_cast<int>(
        std::min<int64_t>(entry.buckets.size(), max_reports));
    if (CountOptions(cap, entry.windows.size()) > max_size) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "output set for trigger data ", entry.trig_data, " exceeds ",
          max_size));
    }
    std::vector<int> cur;
    EntryOptions(static_cast<int>(entry.windows.size()), cap, cur, options[e]);
  }

  // Cross product, pruned by the running total.
  SlotCounts cur(out.slots_.size(), 0);
  bool overflow = false;
  std::function<void(size_t, int)> walk = [&](size_t e, int total) {
    if (overflow) return;
    if (e == options.size()) {
      if (static_cast<int64_t>(out.members_.size()) >= max_size) {
        overflow = true;
        return;
      }
      out.members_.push_back(cur);
      return;
    }
    for (const std::vector<int>& opt : options[e]) {
      int sum = 0;
      for (int c : opt) sum += c;
      if (total + sum > max_reports) continue;
      std::copy(opt.begin(), opt.end(), cur.begin() + first_slot[e]);
      walk(e + 1, total + sum);
    }
    std::fill(cur.begin() + first_slot[e],
              cur.begin() + first_slot[e] + spec.entries[e].windows.size(), 0);
  };
  walk(0, 0);
  if (overflow) {
    return absl::ResourceExhaustedError(
        absl::StrCat("output set exceeds ", max_size, " configurations"));
  }

  std::set<Tick> offsets;
  for (const Slot& s : out.slots_) offsets.insert(s.offset);
  out.step_offsets_.assign(offsets.begin(), offsets.end());
  out.step_slots_.resize(out.step_offsets_.size());
  for (size_t i = 0; i < out.slots_.size(); ++i) {
    const size_t step = std::lower_bound(out.step_offsets_.begin(),
                                         out.step_offsets_.end(),
                                         out.slots_[i].offset) -
                        out.step_offsets_.begin();
    out.step_slots_[step].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int64_t> OutputSet::EntryOptionCounts() const {
  std::vector<int64_t> out;
  for (const TriggerSpecEntry& e : spec_.entries) {
    out.push_back(CountOptions(e.buckets.size(), e.windows.size()));
  }
  return out;
}

SlotCounts OutputSet::Project(const SlotCounts& full, size_t step) const {
  SlotCounts out;
  if (step >= step_slots_.size()) return out;
  for (int slot : step_slots_[step]) out.push_back(full[slot]);
  return out;
}

bool OutputSet::IsValidPartial(const SlotCounts& full_partial) const {
  if (full_partial.size() != slots_.size()) return false;
  std::vector<int64_t> per_entry(spec_.entries.size(), 0);
  int64_t total = 0;
  for (size_t i = 0; i < slots_.size(); ++i) {
    if (full_partial[i] < 0) return false;
    per_entry[slots_[i].entry] += full_partial[i];
    total += full_partial[i];
  }
  for (size_t e = 0; e < per_entry.size(); ++e) {
    if (per_entry[e] > static_cast<int64_t>(spec_.entries[e].buckets.size())) {
      return false;
    }
  }
  return total <= max_reports_;
}

std::vector<EventRecord> RecordsOf(const EventDatabase& db, const UnitId& x) {
  std::vector<EventRecord> out;
  for (const EventRecord& r : db.records) {
    if (r.x == x) out.push_back(r);
  }
  return out;
}

EventDatabase RemoveEventUnit(const EventDatabase& db, const UnitId& x) {
  EventDatabase out = db;
  for (EventRecord& r : out.records) {
    if (r.x == x) r.x = UnitId::Dummy();
  }
  return out;
}

SlotCounts NoiselessCounts(const OutputSet& outputs,
                           absl::Span<const EventRecord> records) {
  std::vector<const EventRecord*> sorted;
  for (const EventRecord& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EventRecord* a, const EventRecord* b) {
                     return a->offset < b->offset;
                   });
  SourceCounter counter(&outputs.spec(), outputs.max_reports());
  SlotCounts out(outputs.slots().size(), 0);
  size_t next = 0;
  for (size_t step = 0; step < outputs.num_steps(); ++step) {
    const Tick deadline = outputs.step_offsets()[step];
    for (; next < sorted.size() && sorted[next]->offset <= deadline; ++next) {
      const EventRecord& r = *sorted[next];
      if (r.value <= 0) continue;
      if (std::optional<int> e = outputs.spec().EntryFor(r.trig_data)) {
        counter.Add(*e, r.value);
      }
    }
    for (int slot : outputs.step_slots(step)) {
      out[slot] = static_cast<int>(
          counter.PassWindow(outputs.slots()[slot].entry).size());
    }
  }
  return out;
}

std::vector<EventReport> ReportsFor(const OutputSet& outputs,
                                    const std::string& src_id,
                                    Tick registered_at,
                                    const SlotCounts& full) {
  std::vector<EventReport> out;
  std::vector<size_t> cursor(outputs.spec().entries.size(), 0);
  for (size_t i = 0; i < outputs.slots().size(); ++i) {
    const OutputSet::Slot& slot = outputs.slots()[i];
    const TriggerSpecEntry& entry = outputs.spec().entries[slot.entry];
    for (int c = 0; c < full[i]; ++c) {
      out.push_back(EventReport{src_id, entry.trig_data,
                                entry.buckets[cursor[slot.entry]++],
                                slot.window, registered_at + slot.offset});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EventReport& a, const EventReport& b) {
                     return a.time < b.time;
                   });
  return out;
}

long double TruthfulProbability(double eps, size_t output_set_size) {
  if (std::isinf(eps) && eps > 0) return 1.0L;
  const long double e = static_cast<long double>(eps);
  return std::expm1(e) /
         (std::exp(e) + static_cast<long double>(output_set_size) - 1.0L);
}

EventQuery NoiselessStepQuery(std::shared_ptr<const OutputSet> outputs,
                              size_t step) {
  return [outputs = std::move(outputs),
          step](absl::Span<const EventRecord> events) {
    return outputs->Project(NoiselessCounts(*outputs, events), step);
  };
}

namespace {

// Answer of the truthful branch, or zeros if it cannot extend the answers
// already given to a member of O.
StepCounts TruthfulAnswer(const IrrState& state, const OutputSet& outputs,
                          absl::Span<const EventRecord> events,
                          const EventQuery& query, SlotCounts& emitted) {
  const size_t step = static_cast<size_t>(state.step);
  const std::vector<int>& slots = outputs.step_slots(step);
  StepCounts zeros(slots.size(), 0);
  if (!query) return zeros;
  StepCounts answer = query(events);
  if (answer.size() != slots.size()) return zeros;
  SlotCounts next = emitted;
  for (size_t i = 0; i < slots.size(); ++i) next[slots[i]] = answer[i];
  if (!outputs.IsValidPartial(next)) return zeros;
  emitted = std::move(next);
  return answer;
}

StepCounts Answer(IrrState& state, const OutputSet& outputs,
                  absl::Span<const EventRecord> events,
                  const EventQuery& query) {
  if (static_cast<size_t>(state.step) >= outputs.num_steps()) {
    ++state.step;
    return {};
  }
  StepCounts out;
  if (state.fixed.has_value()) {
    out = outputs.Project(outputs.members()[*state.fixed],
                          static_cast<size_t>(state.step));
  } else {
    out = TruthfulAnswer(state, outputs, events, query, state.emitted);
  }
  ++state.step;
  return out;
}

}  // namespace

StepCounts IrrStep(IrrState& state, const OutputSet& outputs, double eps,
                   absl::Span<const EventRecord> events,
                   const EventQuery& query, Rng& rng) {
  if (!state.committed) {
    state.committed = true;
    state.emitted.assign(outputs.slots().size(), 0);
    const long double p = TruthfulProbability(eps, outputs.size());
    if (static_cast<long double>(rng.UniformDouble()) < p) {
      state.fixed.reset();
    } else {
      state.fixed = rng.UniformInt(outputs.size());
    }
  }
  return Answer(state, outputs, events, query);
}

std::vector<std::tuple<long double, StepCounts, IrrState>> IrrStepOutcomes(
    const IrrState& state, const OutputSet& outputs, double eps,
    absl::Span<const EventRecord> events, const EventQuery& query) {
  std::vector<std::tuple<long double, StepCounts, IrrState>> out;
  if (state.committed) {
    IrrState next = state;
    StepCounts answer = Answer(next, outputs, events, query);
    out.emplace_back(1.0L, std::move(answer), std::move(next));
    return out;
  }
  IrrState base = state;
  base.committed = true;
  base.emitted.assign(outputs.slots().size(), 0);
  const long double p = TruthfulProbability(eps, outputs.size());
  {
    IrrState next = base;
    StepCounts answer = Answer(next, outputs, events, query);
    out.emplace_back(p, std::move(answer), std::move(next));
  }
  const long double each = (1.0L - p) / static_cast<long double>(outputs.size());
  for (size_t i = 0; i < outputs.size(); ++i) {
    IrrState next = base;
    next.fixed = i;
    StepCounts answer = Answer(next, outputs, events, query);
    out.emplace_back(each, std::move(answer), std::move(next));
  }
  return out;
}

MerMechanism::MerMechanism(MerParams params) : params_(std::move(params)) {
  for (const auto& [x, outputs] : params_.outputs) states_[x] = IrrState{};
}

absl::StatusOr<MerMechanism> MerMechanism::Create(MerParams params) {
  if (!(params.eps > 0.0) || !std::isfinite(params.eps)) {
    return absl::InvalidArgumentError("eps must be positive and finite");
  }
  for (const auto& [x, outputs] : params.outputs) {
    if (x.dummy) {
      return absl::InvalidArgumentError("the dummy unit has no output set");
    }
    if (outputs == nullptr || outputs->size() == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("unit ", x.ToString(), " has an empty output set"));
    }
  }
  return MerMechanism(std::move(params));
}

MerMechanism::Response MerMechanism::Step(const Database& db, const Query& q,
                                          Rng& rng) {
  Response out;
  for (auto& [x, state] : states_) {
    const OutputSet& outputs = *params_.outputs.at(x);
    const std::vector<EventRecord> events = RecordsOf(db, x);
    auto it = q.find(x);
    const EventQuery none;
    Rng unit_rng = rng.Fork(x.ToString());
    out[x] = IrrStep(state, outputs, params_.eps, events,
                     it == q.end() ? none : it->second, unit_rng);
  }
  return out;
}

absl::StatusOr<std::vector<Branch<MerMechanism>>> MerMechanism::StepOutcomes(
    const Database& db, const Query& q) const {
  std::vector<Branch<MerMechanism>> out;
  out.push_back(Branch<MerMechanism>{1.0L, Response{}, *this});
  for (const auto& [x, state] : states_) {
    const OutputSet& outputs = *params_.outputs.at(x);
    const std::vector<EventRecord> events = RecordsOf(db, x);
    auto it = q.find(x);
    const EventQuery none;
    auto unit = IrrStepOutcomes(state, outputs, params_.eps, events,
                                it == q.end() ? none : it->second);
    if (static_cast<int64_t>(out.size()) *
            static_cast<int64_t>(unit.size()) >
        max_outcomes_) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "step has more than ", max_outcomes_, " outcomes"));
    }
    std::vector<Branch<MerMechanism>> next;
    next.reserve(out.size() * unit.size());
    for (const Branch<MerMechanism>& b : out) {
      for (const auto& [p, answer, unit_state] : unit) {
        Branch<MerMechanism> nb = b;
        nb.probability *= p;
        nb.response[x] = answer;
        nb.next.states_[x] = unit_state;
        next.push_back(std::move(nb));
      }
    }
    out = std::move(next);
  }
  return out;
}

MerMechanism::Query NoiselessMerQuery(const MerParams& params, size_t step) {
  MerMechanism::Query q;
  for (const auto& [x, outputs] : params.outputs) {
    q[x] = NoiselessStepQuery(outputs, step);
  }
  return q;
}

}  // namespace sandbox_dp
