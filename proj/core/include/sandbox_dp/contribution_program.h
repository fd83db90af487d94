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

// Declarative contribution programs for scenario files: read a storage key,
// compare, write storage keys, emit (key, value).
//
// Clauses are tried in order. The first clause whose conditions all hold
// applies its writes and emits its contribution; if none holds, the fallback
// contribution is emitted and storage is left unchanged.

#ifndef SANDBOX_DP_CONTRIBUTION_PROGRAM_H_
#define SANDBOX_DP_CONTRIBUTION_PROGRAM_H_

#include <map>
#include <string>
#include <vector>

#include "sandbox_dp/sr_clients.h"
#include "sandbox_dp/types.h"

namespace sandbox_dp {

struct StorageCondition {
  enum class Op { kAbsent, kPresent, kEquals, kNotEquals };

  std::string storage_key;
  Op op = Op::kAbsent;
  // Compared value for kEquals / kNotEquals.
  std::string operand;

  bool Holds(const StorageState& state) const;
};

struct ProgramClause {
  std::vector<StorageCondition> conditions;
  std::map<std::string, std::string> writes;
  Key key;
  int64_t value = 0;
};

struct DeclarativeProgram {
  std::vector<ProgramClause> clauses;
  Key fallback_key;
  int64_t fallback_value = 0;

  ProgramOutput Run(const StorageState& state) const;
  ContributionProgram Compile() const;
};

// Reach-style program: the first time `campaign` is seen on a device, mark it
// in storage and emit (key, value); afterwards emit (key, 0).
DeclarativeProgram FirstSightingProgram(const std::string& campaign, Key key,
                                        int64_t value);

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_CONTRIBUTION_PROGRAM_H_
