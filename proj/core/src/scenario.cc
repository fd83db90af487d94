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

#include "sandbox_dp/scenario.h"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "sandbox_dp/rollout_trace.h"
#include "sandbox_dp/summary_mechanism.h"

namespace sandbox_dp {
namespace {

using json = nlohmann::ordered_json;

absl::Status Bad(std::string_view where, absl::string_view why) {
  return absl::InvalidArgumentError(
      absl::StrCat(std::string(where), ": ", why));
}

// Field readers. `where` names the enclosing object for error messages.
absl::StatusOr<const json*> Field(const json& j, const char* name,
                                  std::string_view where) {
  if (!j.is_object() || !j.contains(name)) {
    return Bad(where, absl::StrCat("missing field \"", name, "\""));
  }
  return &j[name];
}

absl::StatusOr<std::string> StringField(const json& j, const char* name,
                                        std::string_view where) {
  absl::StatusOr<const json*> f = Field(j, name, where);
  if (!f.ok()) return f.status();
  if (!(*f)->is_string()) {
    return Bad(where, absl::StrCat("\"", name, "\" must be a string"));
  }
  return (*f)->get<std::string>();
}

absl::StatusOr<int64_t> IntValue(const json& v, std::string_view where,
                                 const char* name) {
  if (!v.is_number_integer()) {
    return Bad(where, absl::StrCat("\"", name, "\" must be an integer"));
  }
  return v.get<int64_t>();
}

absl::StatusOr<int64_t> IntField(const json& j, const char* name,
                                 std::string_view where) {
  absl::StatusOr<const json*> f = Field(j, name, where);
  if (!f.ok()) return f.status();
  return IntValue(**f, where, name);
}

absl::StatusOr<Tick> TimeValue(const json& v, std::string_view where,
                               const char* name) {
  if (v.is_number_integer()) return v.get<int64_t>();
  if (v.is_string()) {
    absl::StatusOr<Tick> t = ParseDuration(v.get<std::string>());
    if (!t.ok()) return Bad(where, t.status().message());
    return t;
  }
  return Bad(where,
             absl::StrCat("\"", name, "\" must be ticks or a duration string"));
}

absl::StatusOr<Tick> TimeField(const json& j, const char* name,
                               std::string_view where) {
  absl::StatusOr<const json*> f = Field(j, name, where);
  if (!f.ok()) return f.status();
  return TimeValue(**f, where, name);
}

absl::StatusOr<Key> KeyField(const json& j, const char* name,
                             std::string_view where) {
  absl::StatusOr<std::string> s = StringField(j, name, where);
  if (!s.ok()) return s.status();
  absl::StatusOr<Key> k = Key::FromHex(*s);
  if (!k.ok()) return Bad(where, k.status().message());
  return k;
}

absl::StatusOr<double> RealField(const json& j, const char* name,
                                 std::string_view where) {
  absl::StatusOr<std::string> s = StringField(j, name, where);
  if (!s.ok()) return s.status();
  absl::StatusOr<double> d = DoubleFromString(*s);
  if (!d.ok()) return Bad(where, d.status().message());
  return d;
}

absl::StatusOr<FilterSet> FiltersField(const json& j, std::string_view where) {
  FilterSet out;
  if (!j.contains("filters")) return out;
  if (!j["filters"].is_array()) return Bad(where, "\"filters\" must be a list");
  for (const json& f : j["filters"]) {
    if (!f.is_string()) return Bad(where, "filters must be strings");
    out.insert(f.get<std::string>());
  }
  return out;
}

absl::StatusOr<StorageCondition> ParseCondition(const json& j,
                                                std::string_view where) {
  StorageCondition c;
  absl::StatusOr<std::string> key = StringField(j, "key", where);
  absl::StatusOr<std::string> op = StringField(j, "op", where);
  if (!key.ok()) return key.status();
  if (!op.ok()) return op.status();
  c.storage_key = *key;
  if (*op == "absent") {
    c.op = StorageCondition::Op::kAbsent;
  } else if (*op == "present") {
    c.op = StorageCondition::Op::kPresent;
  } else if (*op == "equals" || *op == "not_equals") {
    c.op = *op == "equals" ? StorageCondition::Op::kEquals
                           : StorageCondition::Op::kNotEquals;
    absl::StatusOr<std::string> operand = StringField(j, "operand", where);
    if (!operand.ok()) return operand.status();
    c.operand = *operand;
  } else {
    return Bad(where, absl::StrCat("unknown condition op \"", *op, "\""));
  }
  return c;
}

absl::StatusOr<DeclarativeProgram> ParseProgram(const json& j,
                                                std::string_view where,
                                                int64_t a1) {
  auto check_value = [&](int64_t v) -> absl::Status {
    if (v < 0 || v > a1) {
      return Bad(where, absl::StrCat("program value ", v, " outside [0, ", a1,
                                     "]"));
    }
    return absl::OkStatus();
  };
  if (!j.is_object()) return Bad(where, "program must be an object");
  if (j.contains("first_sighting")) {
    const json& f = j["first_sighting"];
    absl::StatusOr<std::string> campaign = StringField(f, "campaign", where);
    absl::StatusOr<Key> key = KeyField(f, "key", where);
    absl::StatusOr<int64_t> value = IntField(f, "value", where);
    if (!campaign.ok()) return campaign.status();
    if (!key.ok()) return key.status();
    if (!value.ok()) return value.status();
    if (absl::Status s = check_value(*value); !s.ok()) return s;
    return FirstSightingProgram(*campaign, *key, *value);
  }
  DeclarativeProgram p;
  if (!j.contains("clauses") || !j["clauses"].is_array()) {
    return Bad(where, "program needs \"first_sighting\" or a \"clauses\" list");
  }
  for (const json& cj : j["clauses"]) {
    ProgramClause clause;
    if (cj.contains("when")) {
      if (!cj["when"].is_array()) return Bad(where, "\"when\" must be a list");
      for (const json& w : cj["when"]) {
        absl::StatusOr<StorageCondition> c = ParseCondition(w, where);
        if (!c.ok()) return c.status();
        clause.conditions.push_back(*std::move(c));
      }
    }
    if (cj.contains("set")) {
      if (!cj["set"].is_object()) return Bad(where, "\"set\" must be an object");
      for (const auto& [k, v] : cj["set"].items()) {
        if (!v.is_string()) return Bad(where, "storage values must be strings");
        clause.writes[k] = v.get<std::string>();
      }
    }
    absl::StatusOr<const json*> emit = Field(cj, "emit", where);
    if (!emit.ok()) return emit.status();
    absl::StatusOr<Key> key = KeyField(**emit, "key", where);
    absl::StatusOr<int64_t> value = IntField(**emit, "value", where);
    if (!key.ok()) return key.status();
    if (!value.ok()) return value.status();
    if (absl::Status s = check_value(*value); !s.ok()) return s;
    clause.key = *key;
    clause.value = *value;
    p.clauses.push_back(std::move(clause));
  }
  if (j.contains("fallback")) {
    absl::StatusOr<Key> key = KeyField(j["fallback"], "key", where);
    absl::StatusOr<int64_t> value = IntField(j["fallback"], "value", where);
    if (!key.ok()) return key.status();
    if (!value.ok()) return value.status();
    if (absl::Status s = check_value(*value); !s.ok()) return s;
    p.fallback_key = *key;
    p.fallback_value = *value;
  }
  return p;
}

absl::StatusOr<TriggerSpec> ParseSpec(const json& j, std::string_view where) {
  if (!j.is_array()) return Bad(where, "\"spec\" must be a list");
  TriggerSpec spec;
  for (const json& e : j) {
    TriggerSpecEntry entry;
    absl::StatusOr<int64_t> d = IntField(e, "trig_data", where);
    if (!d.ok()) return d.status();
    entry.trig_data = static_cast<int>(*d);
    if (!e.contains("windows") || !e["windows"].is_array()) {
      return Bad(where, "\"windows\" must be a list");
    }
    for (const json& w : e["windows"]) {
      absl::StatusOr<Tick> t = TimeValue(w, where, "windows");
      if (!t.ok()) return t.status();
      entry.windows.push_back(*t);
    }
    if (!e.contains("buckets") || !e["buckets"].is_array()) {
      return Bad(where, "\"buckets\" must be a list");
    }
    for (const json& b : e["buckets"]) {
      absl::StatusOr<int64_t> v = IntValue(b, where, "buckets");
      if (!v.ok()) return v.status();
      entry.buckets.push_back(*v);
    }
    spec.entries.push_back(std::move(entry));
  }
  if (absl::Status s = spec.Validate(); !s.ok()) {
    return Bad(where, s.message());
  }
  return spec;
}

absl::StatusOr<TimelineStep> ParseStep(const json& j, ApiKind api,
                                       const Scenario& sc, size_t index,
                                       uint64_t& next_seq) {
  const std::string where = absl::StrCat("timeline[", index, "]");
  absl::StatusOr<std::string> type = StringField(j, "type", where);
  if (!type.ok()) return type.status();
  absl::StatusOr<Tick> time = TimeField(j, "time", where);
  if (!time.ok()) return time.status();
  if (*time < 0) return Bad(where, "time must be non-negative");

  if (api == ApiKind::kPaaSummary) {
    if (*type != "event") {
      return Bad(where, "paa-summary timelines contain only \"event\" steps");
    }
    PaaEventStep step;
    step.time = *time;
    absl::StatusOr<std::string> device = StringField(j, "device", where);
    if (!device.ok()) return device.status();
    step.device = *device;
    absl::StatusOr<const json*> program = Field(j, "program", where);
    if (!program.ok()) return program.status();
    absl::StatusOr<DeclarativeProgram> p =
        ParseProgram(**program, where, sc.bounds.contribution_budget);
    if (!p.ok()) return p.status();
    step.program = *std::move(p);
    return step;
  }

  if (*type == "source") {
    absl::StatusOr<std::string> src = StringField(j, "src_id", where);
    absl::StatusOr<std::string> dest = StringField(j, "dest", where);
    absl::StatusOr<Tick> expiry = TimeField(j, "expiry", where);
    absl::StatusOr<FilterSet> filters = FiltersField(j, where);
    if (!src.ok()) return src.status();
    if (!dest.ok()) return dest.status();
    if (!expiry.ok()) return expiry.status();
    if (!filters.ok()) return filters.status();
    if (*expiry < *time) return Bad(where, "source expires before it exists");
    if (api == ApiKind::kAraSummary) {
      absl::StatusOr<Key> key = KeyField(j, "key", where);
      if (!key.ok()) return key.status();
      return AraSourceStep{SourceRegistration{*src, *dest, *expiry, *filters,
                                              *key, *time, next_seq++}};
    }
    EventSource source;
    source.src_id = *src;
    source.dest = *dest;
    source.expiry = *expiry;
    source.filters = *filters;
    source.registered_at = *time;
    source.seq = next_seq++;
    absl::StatusOr<int64_t> max_reports = IntField(j, "max_reports", where);
    if (!max_reports.ok()) return max_reports.status();
    if (*max_reports < 0 || *max_reports > 1000) {
      return Bad(where, "\"max_reports\" must be in [0, 1000]");
    }
    source.max_reports = static_cast<int>(*max_reports);
    absl::StatusOr<const json*> spec = Field(j, "spec", where);
    if (!spec.ok()) return spec.status();
    absl::StatusOr<TriggerSpec> parsed = ParseSpec(**spec, where);
    if (!parsed.ok()) return parsed.status();
    source.spec = *std::move(parsed);
    return EventSourceStep{std::move(source)};
  }
  if (*type == "trigger") {
    absl::StatusOr<std::string> dest = StringField(j, "dest", where);
    absl::StatusOr<std::string> trig_id = StringField(j, "trig_id", where);
    absl::StatusOr<FilterSet> filters = FiltersField(j, where);
    absl::StatusOr<int64_t> value = IntField(j, "value", where);
    if (!dest.ok()) return dest.status();
    if (!trig_id.ok()) return trig_id.status();
    if (!filters.ok()) return filters.status();
    if (!value.ok()) return value.status();
    if (*value < 0) return Bad(where, "\"value\" must be non-negative");
    if (api == ApiKind::kAraSummary) {
      if (*value > sc.bounds.contribution_budget) {
        return Bad(where, "\"value\" exceeds the contribution budget");
      }
      absl::StatusOr<Key> key = KeyField(j, "key", where);
      if (!key.ok()) return key.status();
      return AraTriggerStep{
          TriggerRegistration{*dest, *trig_id, *filters, *key, *value, *time}};
    }
    absl::StatusOr<int64_t> data = IntField(j, "trig_data", where);
    if (!data.ok()) return data.status();
    if (*data < 0 || *data >= kTriggerDataValues) {
      return Bad(where, "\"trig_data\" out of range");
    }
    return EventTriggerStep{EventTrigger{*dest, *trig_id, *filters,
                                         static_cast<int>(*data), *value,
                                         *time}};
  }
  return Bad(where, absl::StrCat("unknown step type \"", *type, "\""));
}

absl::StatusOr<RequestStep> ParseRequest(const json& j, size_t index,
                                         size_t report_count) {
  const std::string where = absl::StrCat("requests[", index, "]");
  RequestStep r;
  absl::StatusOr<double> eps = RealField(j, "eps", where);
  if (!eps.ok()) return eps.status();
  r.eps = *eps;
  if (j.contains("delta")) {
    absl::StatusOr<double> delta = RealField(j, "delta", where);
    if (!delta.ok()) return delta.status();
    r.delta = *delta;
  }
  if (!(r.eps > 0.0) || r.delta < 0.0 || r.delta > 1.0) {
    return Bad(where, "need eps > 0 and delta in [0, 1]");
  }
  if (j.contains("reports")) {
    const json& rs = j["reports"];
    if (rs.is_string() && rs.get<std::string>() == "all") {
      r.reports.reset();
    } else if (rs.is_array()) {
      std::vector<size_t> idx;
      for (const json& v : rs) {
        if (!v.is_number_unsigned() || v.get<uint64_t>() >= report_count) {
          return Bad(where, absl::StrCat("report indices must be in [0, ",
                                         report_count, ")"));
        }
        idx.push_back(v.get<size_t>());
      }
      r.reports = std::move(idx);
    } else {
      return Bad(where, "\"reports\" must be \"all\" or a list of indices");
    }
  }
  absl::StatusOr<std::string> mode = StringField(j, "mode", where);
  if (!mode.ok()) return mode.status();
  if (*mode == "discovery") {
    if (!(r.delta > 0.0)) return Bad(where, "discovery mode needs delta > 0");
    r.mode = KeyDiscovery{};
  } else if (*mode == "listed") {
    ListedKeys listed;
    if (!j.contains("keys") || !j["keys"].is_array()) {
      return Bad(where, "listed mode needs a \"keys\" list");
    }
    for (const json& k : j["keys"]) {
      if (!k.is_string()) return Bad(where, "keys must be hex strings");
      absl::StatusOr<Key> key = Key::FromHex(k.get<std::string>());
      if (!key.ok()) return Bad(where, key.status().message());
      listed.keys.push_back(*key);
    }
    r.mode = std::move(listed);
  } else {
    return Bad(where, absl::StrCat("unknown mode \"", *mode, "\""));
  }
  return r;
}

absl::StatusOr<BudgetAmount> AmountField(const json& j, const char* name,
                                         std::string_view where) {
  absl::StatusOr<std::string> s = StringField(j, name, where);
  if (!s.ok()) return s.status();
  absl::StatusOr<BudgetAmount> a =
      BudgetAmount::FromDecimalString(*s, BudgetAmount::Rounding::kExact);
  if (!a.ok()) return Bad(where, a.status().message());
  return a;
}

}  // namespace

absl::StatusOr<Tick> ParseDuration(std::string_view text) {
  if (text.empty()) return absl::InvalidArgumentError("empty duration");
  Tick total = 0;
  size_t i = 0;
  bool any = false;
  while (i < text.size()) {
    int64_t n = 0;
    const auto r = std::from_chars(text.data() + i, text.data() + text.size(), n);
    if (r.ec != std::errc() || n < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad duration \"", std::string(text), "\""));
    }
    i = r.ptr - text.data();
    Tick unit = 1;
    if (i < text.size()) {
      switch (text[i]) {
        case 'd': unit = kTicksPerDay; break;
        case 'h': unit = 60 * kTicksPerMinute; break;
        case 'm': unit = kTicksPerMinute; break;
        case 's': unit = 1; break;
        default:
          return absl::InvalidArgumentError(
              absl::StrCat("bad duration unit in \"", std::string(text), "\""));
      }
      ++i;
    } else if (any) {
      return absl::InvalidArgumentError(
          absl::StrCat("missing unit in \"", std::string(text), "\""));
    }
    if (n > (INT64_MAX - total) / unit) {
      return absl::InvalidArgumentError("duration overflows");
    }
    total += n * unit;
    any = true;
  }
  return total;
}

absl::StatusOr<Scenario> ParseScenario(std::string_view json_text) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return Bad("scenario", "not valid JSON");
  if (!doc.is_object()) return Bad("scenario", "must be a JSON object");
  absl::StatusOr<std::string> format = StringField(doc, "format", "scenario");
  if (!format.ok()) return format.status();
  if (*format != kScenarioFormat) {
    return Bad("scenario", absl::StrCat("format must be \"",
                                        std::string(kScenarioFormat), "\""));
  }
  Scenario sc;
  absl::StatusOr<std::string> api = StringField(doc, "api", "scenario");
  if (!api.ok()) return api.status();
  if (*api == "ara-summary") {
    sc.api = ApiKind::kAraSummary;
  } else if (*api == "paa-summary") {
    sc.api = ApiKind::kPaaSummary;
  } else if (*api == "event-level") {
    sc.api = ApiKind::kEventLevel;
  } else {
    return Bad("scenario", absl::StrCat("unknown api \"", *api, "\""));
  }
  if (!doc.contains("seed") || !doc["seed"].is_number_unsigned()) {
    return Bad("scenario", "\"seed\" is required and must be a non-negative "
                           "integer");
  }
  sc.seed = doc["seed"].get<uint64_t>();

  const json params = doc.value("params", json::object());
  if (!params.is_object()) return Bad("params", "must be an object");
  if (sc.api == ApiKind::kEventLevel) {
    absl::StatusOr<double> eps = RealField(params, "eps", "params");
    if (!eps.ok()) return eps.status();
    if (!(*eps > 0.0) || !std::isfinite(*eps)) {
      return Bad("params", "\"eps\" must be positive");
    }
    sc.event_eps = *eps;
  } else {
    if (params.contains("contribution_budget")) {
      absl::StatusOr<int64_t> a1 =
          IntField(params, "contribution_budget", "params");
      if (!a1.ok()) return a1.status();
      sc.bounds.contribution_budget = *a1;
    }
    if (params.contains("sparsity_budget")) {
      absl::StatusOr<int64_t> a0 = IntField(params, "sparsity_budget", "params");
      if (!a0.ok()) return a0.status();
      sc.bounds.sparsity_budget = *a0;
    }
    if (absl::Status s = sc.bounds.Validate(); !s.ok()) {
      return Bad("params", s.message());
    }
    if (params.contains("eps_star")) {
      absl::StatusOr<BudgetAmount> e = AmountField(params, "eps_star", "params");
      if (!e.ok()) return e.status();
      sc.eps_star = *e;
    }
    // No default: the cap on delta is a deployment choice.
    absl::StatusOr<BudgetAmount> d = AmountField(params, "delta_star", "params");
    if (!d.ok()) return d.status();
    sc.delta_star = *d;
    if (sc.delta_star > BudgetAmount::FromInteger(1)) {
      return Bad("params", "\"delta_star\" must be at most 1");
    }
    if (params.contains("window")) {
      absl::StatusOr<Tick> w = TimeField(params, "window", "params");
      if (!w.ok()) return w.status();
      if (*w <= 0) return Bad("params", "\"window\" must be positive");
      sc.window_ticks = *w;
    }
  }

  if (!doc.contains("timeline") || !doc["timeline"].is_array()) {
    return Bad("scenario", "\"timeline\" must be a list");
  }
  uint64_t next_seq = 1;
  Tick last = 0;
  size_t report_count = 0;
  std::set<std::string> src_ids;
  for (size_t i = 0; i < doc["timeline"].size(); ++i) {
    absl::StatusOr<TimelineStep> step =
        ParseStep(doc["timeline"][i], sc.api, sc, i, next_seq);
    if (!step.ok()) return step.status();
    const Tick t = std::visit(
        [](const auto& s) -> Tick {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, AraSourceStep>) {
            return s.source.registered_at;
          } else if constexpr (std::is_same_v<T, AraTriggerStep>) {
            return s.trigger.time;
          } else if constexpr (std::is_same_v<T, PaaEventStep>) {
            return s.time;
          } else if constexpr (std::is_same_v<T, EventSourceStep>) {
            return s.source.registered_at;
          } else {
            return s.trigger.time;
          }
        },
        *step);
    const std::string where = absl::StrCat("timeline[", i, "]");
    if (t < last) return Bad(where, "timeline must be in time order");
    last = t;
    if (const auto* s = std::get_if<AraSourceStep>(&*step)) {
      if (!src_ids.insert(s->source.src_id).second) {
        return Bad(where, "duplicate src_id");
      }
    } else if (const auto* s = std::get_if<EventSourceStep>(&*step)) {
      if (!src_ids.insert(s->source.src_id).second) {
        return Bad(where, "duplicate src_id");
      }
    } else if (std::holds_alternative<AraTriggerStep>(*step) ||
               std::holds_alternative<PaaEventStep>(*step)) {
      ++report_count;
    }
    sc.timeline.push_back(*std::move(step));
  }

  if (doc.contains("requests")) {
    if (sc.api == ApiKind::kEventLevel) {
      return Bad("scenario", "event-level scenarios take no requests");
    }
    if (!doc["requests"].is_array()) {
      return Bad("scenario", "\"requests\" must be a list");
    }
    for (size_t i = 0; i < doc["requests"].size(); ++i) {
      absl::StatusOr<RequestStep> r =
          ParseRequest(doc["requests"][i], i, report_count);
      if (!r.ok()) return r.status();
      sc.requests.push_back(*std::move(r));
    }
  }
  return sc;
}

namespace {

std::string Line(const json& j) { return absl::StrCat(j.dump(), "\n"); }

json ReportJson(size_t index, const AggregatableReport& r) {
  json j;
  j["index"] = index;
  j["id"] = r.id.ToHex();
  if (r.payload.has_value()) {
    j["key"] = r.payload->key.ToHex();
    j["value"] = r.payload->value;
  } else {
    j["key"] = nullptr;
    j["value"] = nullptr;
  }
  return j;
}

absl::StatusOr<SimulationOutput> RunSummary(
    const Scenario& sc, const std::optional<LedgerSnapshot>& ledger_in,
    NoiseMode noise) {
  SimulationOutput out;
  Rng root(sc.seed);
  Rng client_rng = root.Fork("client");

  std::vector<AggregatableReport> reports;
  // Unit per report, for non-null reports.
  std::vector<std::optional<UnitId>> units;

  if (sc.api == ApiKind::kAraSummary) {
    absl::StatusOr<AraSummaryClient> client = AraSummaryClient::Create(sc.bounds);
    if (!client.ok()) return client.status();
    for (size_t i = 0; i < sc.timeline.size(); ++i) {
      json t;
      t["step"] = i;
      if (const auto* s = std::get_if<AraSourceStep>(&sc.timeline[i])) {
        if (absl::Status st = client->RegisterSource(s->source); !st.ok()) {
          return Bad(absl::StrCat("timeline[", i, "]"), st.message());
        }
        t["type"] = "source";
        t["src_id"] = s->source.src_id;
      } else {
        const auto& trig = std::get<AraTriggerStep>(sc.timeline[i]).trigger;
        TriggerOutcome o = client->RegisterTrigger(trig, trig.time, client_rng);
        t["type"] = "trigger";
        t["trig_id"] = trig.trig_id;
        t["report"] = reports.size();
        t["attributed_source"] = o.attributed_source.has_value()
                                     ? json(*o.attributed_source)
                                     : json(nullptr);
        units.push_back(o.attributed_source.has_value()
                            ? std::optional(UnitId::Source(*o.attributed_source))
                            : std::nullopt);
        reports.push_back(o.report);
      }
      out.transcript_jsonl += Line(t);
    }
  } else {
    absl::StatusOr<PaaSummaryClient> client = PaaSummaryClient::Create(sc.bounds);
    if (!client.ok()) return client.status();
    for (size_t i = 0; i < sc.timeline.size(); ++i) {
      const auto& ev = std::get<PaaEventStep>(sc.timeline[i]);
      const int64_t window = PaaSummaryClient::WindowOf(ev.time, sc.window_ticks);
      absl::StatusOr<AggregatableReport> r = client->RegisterEvent(
          ev.device, window, ev.program.Compile(), client_rng);
      if (!r.ok()) return Bad(absl::StrCat("timeline[", i, "]"), r.status().message());
      json t;
      t["step"] = i;
      t["type"] = "event";
      t["device"] = ev.device;
      t["window"] = window;
      t["report"] = reports.size();
      units.push_back(r->is_null() ? std::nullopt
                                   : std::optional(UnitId::DeviceWindow(
                                         ev.device, window)));
      reports.push_back(*r);
      out.transcript_jsonl += Line(t);
    }
  }
  for (size_t i = 0; i < reports.size(); ++i) {
    out.reports_jsonl += Line(ReportJson(i, reports[i]));
  }

  LedgerSnapshot snap{sc.eps_star, sc.delta_star, {}};
  if (ledger_in.has_value()) {
    if (ledger_in->eps_star != sc.eps_star ||
        ledger_in->delta_star != sc.delta_star) {
      return absl::FailedPreconditionError(absl::StrCat(
          "ledger caps (", ledger_in->eps_star.ToDecimalString(), ", ",
          ledger_in->delta_star.ToDecimalString(),
          ") differ from the scenario's (", sc.eps_star.ToDecimalString(), ", ",
          sc.delta_star.ToDecimalString(), ")"));
    }
    snap = *ledger_in;
  }
  absl::StatusOr<std::unique_ptr<PrivacyBudgetLedger>> ledger =
      PrivacyBudgetLedger::FromSnapshot(snap);
  if (!ledger.ok()) {
    return absl::FailedPreconditionError(ledger.status().message());
  }
  AggregationService service(ledger->get(), sc.bounds, noise);

  RolloutTrace trace{sc.bounds, sc.eps_star.ToDouble(), sc.delta_star.ToDouble(),
                     {}};
  std::set<ReportId> seen;
  Rng request_rng = root.Fork("requests");
  for (size_t i = 0; i < sc.requests.size(); ++i) {
    const RequestStep& req = sc.requests[i];
    std::vector<size_t> idx;
    if (req.reports.has_value()) {
      idx = *req.reports;
    } else {
      for (size_t k = 0; k < reports.size(); ++k) idx.push_back(k);
    }
    AggregationRequest ar;
    ar.eps = req.eps;
    ar.delta = req.delta;
    ar.mode = req.mode;
    MsrTurnTrace turn;
    turn.eps = req.eps;
    const bool discovery = std::holds_alternative<KeyDiscovery>(req.mode);
    turn.delta = discovery ? req.delta : 0.0;
    std::set<ReportId> ys;
    for (size_t k : idx) {
      ar.batch.push_back(reports[k]);
      ys.insert(reports[k].id);
      if (units[k].has_value() && seen.insert(reports[k].id).second) {
        turn.admitted.push_back(
            AdmittedReport{*units[k], reports[k].id, *reports[k].payload});
      }
    }
    turn.reports.assign(ys.begin(), ys.end());
    Rng rng = request_rng.Fork(static_cast<uint64_t>(i));
    absl::StatusOr<AggregationResult> result = service.Aggregate(ar, rng);
    if (!result.ok()) {
      return Bad(absl::StrCat("requests[", i, "]"), result.status().message());
    }
    json s;
    s["request"] = i;
    if (const auto* summary = std::get_if<SummaryReport>(&*result)) {
      s["status"] = "released";
      json entries = json::array();
      for (const SummaryEntry& e : summary->entries) {
        entries.push_back(json{{"key", e.key.ToHex()}, {"value", e.value}});
      }
      s["entries"] = std::move(entries);
      if (summary->threshold.has_value()) s["threshold"] = *summary->threshold;
    } else {
      const auto& aborted = std::get<AggregationAborted>(*result);
      s["status"] = "aborted";
      s["report"] = aborted.report.ToHex();
      s["reason"] = aborted.reason;
      turn.aborted = true;
      ++out.aborted_requests;
    }
    out.summaries_jsonl += Line(s);
    trace.turns.push_back(std::move(turn));
  }
  out.trace_jsonl = SerializeRolloutTrace(trace);
  out.ledger = (*ledger)->Snapshot();
  return out;
}

absl::StatusOr<SimulationOutput> RunEventLevel(const Scenario& sc,
                                               NoiseMode noise) {
  const double eps = noise == NoiseMode::kDisabledForAudit
                         ? std::numeric_limits<double>::infinity()
                         : sc.event_eps;
  SimulationOutput out;
  Rng root(sc.seed);
  EventLevelClient client;
  struct PerSource {
    const EventSource* source;
    std::vector<EventRecord> records;
  };
  std::map<std::string, PerSource> sources;
  std::vector<std::string> order;
  for (size_t i = 0; i < sc.timeline.size(); ++i) {
    const std::string where = absl::StrCat("timeline[", i, "]");
    json t;
    t["step"] = i;
    if (const auto* s = std::get_if<EventSourceStep>(&sc.timeline[i])) {
      if (absl::Status st = client.RegisterSource(s->source); !st.ok()) {
        return Bad(where, st.message());
      }
      sources[s->source.src_id] = PerSource{&s->source, {}};
      order.push_back(s->source.src_id);
      t["type"] = "source";
      t["src_id"] = s->source.src_id;
    } else {
      const EventTrigger& trig = std::get<EventTriggerStep>(sc.timeline[i]).trigger;
      absl::StatusOr<std::vector<EventReport>> r = client.RegisterTrigger(trig);
      if (!r.ok()) return Bad(where, r.status().message());
      t["type"] = "trigger";
      t["trig_id"] = trig.trig_id;
      const std::optional<std::string>& src = client.last_attribution();
      t["attributed_source"] = src.has_value() ? json(*src) : json(nullptr);
      if (src.has_value()) {
        PerSource& ps = sources.at(*src);
        ps.records.push_back(EventRecord{UnitId::Source(*src), trig.trig_id,
                                         trig.trig_data, trig.value,
                                         trig.time - ps.source->registered_at});
      }
    }
    out.transcript_jsonl += Line(t);
  }

  struct Timed {
    EventReport report;
    size_t source_rank;
  };
  std::vector<Timed> all;
  Rng irr_root = root.Fork("irr");
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const PerSource& ps = sources.at(order[rank]);
    absl::StatusOr<OutputSet> outputs =
        OutputSet::Enumerate(ps.source->spec, ps.source->max_reports);
    if (!outputs.ok()) {
      return Bad(absl::StrCat("source ", ps.source->src_id),
                 outputs.status().message());
    }
    auto shared = std::make_shared<const OutputSet>(*std::move(outputs));
    IrrState state;
    Rng rng = irr_root.Fork(ps.source->src_id);
    SlotCounts full(shared->slots().size(), 0);
    for (size_t step = 0; step < shared->num_steps(); ++step) {
      StepCounts answer = IrrStep(state, *shared, eps, ps.records,
                                  NoiselessStepQuery(shared, step), rng);
      const std::vector<int>& slots = shared->step_slots(step);
      for (size_t k = 0; k < slots.size(); ++k) full[slots[k]] = answer[k];
    }
    for (EventReport& r : ReportsFor(*shared, ps.source->src_id,
                                     ps.source->registered_at, full)) {
      all.push_back(Timed{std::move(r), rank});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Timed& a, const Timed& b) {
    return std::tie(a.report.time, a.source_rank) <
           std::tie(b.report.time, b.source_rank);
  });
  for (const Timed& t : all) {
    json j;
    j["src_id"] = t.report.src_id;
    j["trig_data"] = t.report.trig_data;
    j["bucket"] = t.report.bucket;
    j["window_index"] = t.report.window_index;
    j["time"] = t.report.time;
    out.reports_jsonl += Line(j);
  }
  return out;
}

}  // namespace

absl::StatusOr<SimulationOutput> RunSimulation(
    const Scenario& scenario, const std::optional<LedgerSnapshot>& ledger,
    const SimulationOptions& options) {
  if (scenario.api == ApiKind::kEventLevel) {
    return RunEventLevel(scenario, options.noise);
  }
  return RunSummary(scenario, ledger, options.noise);
}

}  // namespace sandbox_dp
