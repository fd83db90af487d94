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

#include "sandbox_dp/contribution_program.h"

#include <algorithm>

namespace sandbox_dp {

bool StorageCondition::Holds(const StorageState& state) const {
  const auto it = state.find(storage_key);
  switch (op) {
    case Op::kAbsent:
      return it == state.end();
    case Op::kPresent:
      return it != state.end();
    case Op::kEquals:
      return it != state.end() && it->second == operand;
    case Op::kNotEquals:
      return it == state.end() || it->second != operand;
  }
  return false;
}

ProgramOutput DeclarativeProgram::Run(const StorageState& state) const {
  for (const ProgramClause& clause : clauses) {
    const bool matches =
        std::all_of(clause.conditions.begin(), clause.conditions.end(),
                    [&](const StorageCondition& c) { return c.Holds(state); });
    if (!matches) continue;
    StorageState next = state;
    for (const auto& [k, v] : clause.writes) next[k] = v;
    return ProgramOutput{std::move(next), clause.key, clause.value};
  }
  return ProgramOutput{state, fallback_key, fallback_value};
}

ContributionProgram DeclarativeProgram::Compile() const {
  return [program = *this](const StorageState& state) {
    return program.Run(state);
  };
}

DeclarativeProgram FirstSightingProgram(const std::string& campaign, Key key,
                                        int64_t value) {
  const std::string marker = "seen:" + campaign;
  DeclarativeProgram program;
  program.clauses.push_back(ProgramClause{
      .conditions = {StorageCondition{marker, StorageCondition::Op::kAbsent,
                                      ""}},
      .writes = {{marker, "1"}},
      .key = key,
      .value = value,
  });
  program.fallback_key = key;
  program.fallback_value = 0;
  return program;
}

}  // namespace sandbox_dp
