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

#include "sandbox_dp/rollout_trace.h"

#include <charconv>
#include <cstdint>
#include <string>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json.hpp"

namespace sandbox_dp {
namespace {

using json = nlohmann::ordered_json;

json UnitToJson(const UnitId& x) {
  json j;
  if (x.dummy) {
    j["dummy"] = true;
    return j;
  }
  j["name"] = x.name;
  if (x.window.has_value()) j["window"] = *x.window;
  return j;
}

absl::StatusOr<UnitId> UnitFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("unit must be an object");
  if (j.value("dummy", false)) return UnitId::Dummy();
  if (!j.contains("name") || !j["name"].is_string()) {
    return absl::InvalidArgumentError("unit needs a string name");
  }
  UnitId x = UnitId::Source(j["name"].get<std::string>());
  if (j.contains("window")) {
    if (!j["window"].is_number_integer()) {
      return absl::InvalidArgumentError("unit window must be an integer");
    }
    x.window = j["window"].get<int64_t>();
  }
  return x;
}

absl::StatusOr<double> RealField(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat("field \"", name, "\" must be a decimal string"));
  }
  return DoubleFromString(j[name].get<std::string>());
}

template <typename Id>
absl::StatusOr<Id> HexField(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat("field \"", name, "\" must be a hex string"));
  }
  return Id::FromHex(j[name].get<std::string>());
}

absl::StatusOr<int64_t> IntField(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_number_integer()) {
    return absl::InvalidArgumentError(
        absl::StrCat("field \"", name, "\" must be an integer"));
  }
  return j[name].get<int64_t>();
}

}  // namespace

std::string DoubleToString(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

absl::StatusOr<double> DoubleFromString(std::string_view text) {
  double out = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a decimal number: \"", std::string(text), "\""));
  }
  return out;
}

RolloutTrace TraceOf(const MsrMechanism& mechanism) {
  return RolloutTrace{mechanism.params().bounds, mechanism.params().eps_star,
                      mechanism.params().delta_star, mechanism.trace()};
}

std::string SerializeRolloutTrace(const RolloutTrace& trace) {
  std::string out;
  json params;
  params["type"] = "params";
  params["contribution_budget"] = trace.bounds.contribution_budget;
  params["sparsity_budget"] = trace.bounds.sparsity_budget;
  params["eps_star"] = DoubleToString(trace.eps_star);
  params["delta_star"] = DoubleToString(trace.delta_star);
  absl::StrAppend(&out, params.dump(), "\n");
  for (size_t t = 0; t < trace.turns.size(); ++t) {
    const MsrTurnTrace& turn = trace.turns[t];
    json q;
    q["type"] = "query";
    q["turn"] = t;
    q["eps"] = DoubleToString(turn.eps);
    q["delta"] = DoubleToString(turn.delta);
    json ys = json::array();
    for (const ReportId& y : turn.reports) ys.push_back(y.ToHex());
    q["reports"] = std::move(ys);
    absl::StrAppend(&out, q.dump(), "\n");
    for (const AdmittedReport& a : turn.admitted) {
      json j;
      j["type"] = "admit";
      j["turn"] = t;
      j["unit"] = UnitToJson(a.x);
      j["y"] = a.y.ToHex();
      j["key"] = a.contribution.key.ToHex();
      j["value"] = a.contribution.value;
      absl::StrAppend(&out, j.dump(), "\n");
    }
    if (turn.aborted) {
      json j;
      j["type"] = "abort";
      j["turn"] = t;
      absl::StrAppend(&out, j.dump(), "\n");
    }
  }
  return out;
}

absl::StatusOr<RolloutTrace> ParseRolloutTrace(std::string_view text) {
  RolloutTrace trace;
  bool have_params = false;
  int line_no = 0;
  for (absl::string_view piece :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    const std::string_view line(piece.data(), piece.size());
    if (line.empty()) continue;
    auto bad = [&](absl::string_view why) {
      return absl::InvalidArgumentError(
          absl::StrCat("trace line ", line_no, ": ", why));
    };
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("type") ||
        !j["type"].is_string()) {
      return bad("not a JSON object with a type");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "params") {
      if (have_params) return bad("duplicate params line");
      absl::StatusOr<int64_t> a1 = IntField(j, "contribution_budget");
      absl::StatusOr<int64_t> a0 = IntField(j, "sparsity_budget");
      absl::StatusOr<double> es = RealField(j, "eps_star");
      absl::StatusOr<double> ds = RealField(j, "delta_star");
      if (!a1.ok() || !a0.ok() || !es.ok() || !ds.ok()) {
        return bad("malformed params");
      }
      trace.bounds = ContributionBounds{*a1, *a0};
      if (!trace.bounds.Validate().ok()) return bad("invalid bounds");
      trace.eps_star = *es;
      trace.delta_star = *ds;
      have_params = true;
      continue;
    }
    if (!have_params) return bad("params line must come first");
    absl::StatusOr<int64_t> turn = IntField(j, "turn");
    if (!turn.ok()) return bad(turn.status().message());
    if (type == "query") {
      if (*turn != static_cast<int64_t>(trace.turns.size())) {
        return bad("turns must be consecutive from 0");
      }
      MsrTurnTrace t;
      absl::StatusOr<double> eps = RealField(j, "eps");
      absl::StatusOr<double> delta = RealField(j, "delta");
      if (!eps.ok() || !delta.ok()) return bad("malformed eps/delta");
      t.eps = *eps;
      t.delta = *delta;
      if (!j.contains("reports") || !j["reports"].is_array()) {
        return bad("reports must be an array");
      }
      for (const json& y : j["reports"]) {
        if (!y.is_string()) return bad("report id must be a string");
        absl::StatusOr<ReportId> id = ReportId::FromHex(y.get<std::string>());
        if (!id.ok()) return bad(id.status().message());
        t.reports.push_back(*id);
      }
      trace.turns.push_back(std::move(t));
      continue;
    }
    if (trace.turns.empty() ||
        *turn != static_cast<int64_t>(trace.turns.size()) - 1) {
      return bad("record for a turn without a preceding query line");
    }
    MsrTurnTrace& current = trace.turns.back();
    if (type == "admit") {
      if (!j.contains("unit")) return bad("admit without unit");
      absl::StatusOr<UnitId> x = UnitFromJson(j["unit"]);
      absl::StatusOr<ReportId> y = HexField<ReportId>(j, "y");
      absl::StatusOr<Key> k = HexField<Key>(j, "key");
      absl::StatusOr<int64_t> v = IntField(j, "value");
      if (!x.ok() || !y.ok() || !k.ok() || !v.ok()) return bad("malformed admit");
      current.admitted.push_back(AdmittedReport{*x, *y, Contribution{*k, *v}});
    } else if (type == "abort") {
      current.aborted = true;
    } else {
      return bad(absl::StrCat("unknown record type \"", type, "\""));
    }
  }
  if (!have_params) return absl::InvalidArgumentError("trace has no params");
  return trace;
}

}  // namespace sandbox_dp
