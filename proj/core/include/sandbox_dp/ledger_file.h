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

// On-disk budget ledger.
//
// Format (JSON, amounts as decimal strings):
//   {"format": "sandbox-dp-ledger/1", "eps_star": "64", "delta_star": "0.001",
//    "records": [{"id": "<32 hex>", "eps": "1.5", "delta": "0"}, ...]}

#ifndef SANDBOX_DP_LEDGER_FILE_H_
#define SANDBOX_DP_LEDGER_FILE_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandbox_dp/aggregation_service.h"

namespace sandbox_dp {

inline constexpr std::string_view kLedgerFormat = "sandbox-dp-ledger/1";

std::string SerializeLedger(const LedgerSnapshot& snapshot);
absl::StatusOr<LedgerSnapshot> ParseLedger(std::string_view text);

// Caps, then one line per charged report with used and remaining budget.
std::string FormatBudgetReport(const LedgerSnapshot& snapshot);

// Missing file yields NotFound.
absl::StatusOr<LedgerSnapshot> ReadLedgerFile(const std::string& path);
// Writes to a sibling temporary file and renames over `path`.
absl::Status WriteLedgerFile(const std::string& path,
                             const LedgerSnapshot& snapshot);

// Exclusive advisory lock on "<path>.lock", held for the object's lifetime.
class LedgerLock {
 public:
  static absl::StatusOr<LedgerLock> Acquire(const std::string& ledger_path);

  LedgerLock(LedgerLock&& other) noexcept;
  LedgerLock& operator=(LedgerLock&& other) noexcept;
  LedgerLock(const LedgerLock&) = delete;
  LedgerLock& operator=(const LedgerLock&) = delete;
  ~LedgerLock();

 private:
  explicit LedgerLock(int fd) : fd_(fd) {}
  int fd_ = -1;
};

}  // namespace sandbox_dp

#endif  // SANDBOX_DP_LEDGER_FILE_H_
