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

// The `sandbox_dp` command line: simulate, audit, budget-report.

#ifndef SANDBOX_DP_TOOLS_CLI_H_
#define SANDBOX_DP_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace sandbox_dp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSchemaError = 2,
  kRequestAborted = 3,
  kLedgerConflict = 4,
  kIoError = 5,
  kAuditFailed = 6,
};

// Environment variable naming the default ledger directory.
inline constexpr char kLedgerDirEnv[] = "SANDBOX_DP_LEDGER_DIR";
inline constexpr char kLedgerFileName[] = "ledger.json";

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace sandbox_dp::cli

#endif  // SANDBOX_DP_TOOLS_CLI_H_
