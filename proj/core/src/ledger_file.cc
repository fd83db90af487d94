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

#include "sandbox_dp/ledger_file.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"

namespace sandbox_dp {
namespace {

using json = nlohmann::ordered_json;

absl::StatusOr<BudgetAmount> AmountField(const json& obj, const char* name) {
  if (!obj.contains(name) || !obj[name].is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat("ledger field \"", name, "\" must be a decimal string"));
  }
  return BudgetAmount::FromDecimalString(obj[name].get<std::string>());
}

}  // namespace

std::string SerializeLedger(const LedgerSnapshot& snapshot) {
  json doc;
  doc["format"] = std::string(kLedgerFormat);
  doc["eps_star"] = snapshot.eps_star.ToDecimalString();
  doc["delta_star"] = snapshot.delta_star.ToDecimalString();
  json records = json::array();
  std::vector<LedgerRecord> sorted = snapshot.records;
  std::sort(sorted.begin(), sorted.end(),
            [](const LedgerRecord& a, const LedgerRecord& b) {
              return a.id < b.id;
            });
  for (const LedgerRecord& r : sorted) {
    json rec;
    rec["id"] = r.id.ToHex();
    rec["eps"] = r.used.eps.ToDecimalString();
    rec["delta"] = r.used.delta.ToDecimalString();
    records.push_back(std::move(rec));
  }
  doc["records"] = std::move(records);
  return doc.dump(2) + "\n";
}

absl::StatusOr<LedgerSnapshot> ParseLedger(std::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return absl::InvalidArgumentError("ledger is not a JSON object");
  }
  if (!doc.contains("format") || doc["format"] != std::string(kLedgerFormat)) {
    return absl::InvalidArgumentError(
        absl::StrCat("ledger format must be \"", std::string(kLedgerFormat), "\""));
  }
  LedgerSnapshot snap;
  absl::StatusOr<BudgetAmount> eps_star = AmountField(doc, "eps_star");
  if (!eps_star.ok()) return eps_star.status();
  absl::StatusOr<BudgetAmount> delta_star = AmountField(doc, "delta_star");
  if (!delta_star.ok()) return delta_star.status();
  snap.eps_star = *eps_star;
  snap.delta_star = *delta_star;
  if (!doc.contains("records") || !doc["records"].is_array()) {
    return absl::InvalidArgumentError("ledger \"records\" must be an array");
  }
  std::set<ReportId> ids;
  for (const json& rec : doc["records"]) {
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
      return absl::InvalidArgumentError("ledger record without string id");
    }
    absl::StatusOr<ReportId> id =
        ReportId::FromHex(rec["id"].get<std::string>());
    if (!id.ok()) return id.status();
    absl::StatusOr<BudgetAmount> eps = AmountField(rec, "eps");
    if (!eps.ok()) return eps.status();
    absl::StatusOr<BudgetAmount> delta = AmountField(rec, "delta");
    if (!delta.ok()) return delta.status();
    if (*eps > snap.eps_star || *delta > snap.delta_star) {
      return absl::InvalidArgumentError(
          absl::StrCat("ledger record ", id->ToHex(), " exceeds the caps"));
    }
    if (!ids.insert(*id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("ledger record ", id->ToHex(), " appears twice"));
    }
    snap.records.push_back(LedgerRecord{*id, BudgetUsage{*eps, *delta}});
  }
  return snap;
}

std::string FormatBudgetReport(const LedgerSnapshot& snapshot) {
  std::string out = absl::StrCat(
      "caps: eps* = ", snapshot.eps_star.ToDecimalString(), ", delta* = ",
      snapshot.delta_star.ToDecimalString(), "\n", "charged reports: ",
      snapshot.records.size(), "\n");
  if (snapshot.records.empty()) return out;
  absl::StrAppend(&out, absl::StrFormat("%-34s %14s %14s %14s %14s\n", "report",
                                        "eps used", "eps left", "delta used",
                                        "delta left"));
  for (const LedgerRecord& r : snapshot.records) {
    absl::StrAppend(
        &out,
        absl::StrFormat("%-34s %14s %14s %14s %14s\n", r.id.ToHex(),
                        r.used.eps.ToDecimalString(),
                        (snapshot.eps_star - r.used.eps).ToDecimalString(),
                        r.used.delta.ToDecimalString(),
                        (snapshot.delta_star - r.used.delta).ToDecimalString()));
  }
  return out;
}

absl::StatusOr<LedgerSnapshot> ReadLedgerFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (errno == ENOENT) {
      return absl::NotFoundError(absl::StrCat("no ledger at ", path));
    }
    return absl::UnavailableError(
        absl::StrCat("cannot open ledger ", path, ": ", std::strerror(errno)));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<LedgerSnapshot> snap = ParseLedger(buffer.str());
  if (!snap.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", snap.status().message()));
  }
  return snap;
}

absl::Status WriteLedgerFile(const std::string& path,
                             const LedgerSnapshot& snapshot) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("cannot write ", tmp, ": ", std::strerror(errno)));
    }
    out << SerializeLedger(snapshot);
    out.flush();
    if (!out) return absl::DataLossError(absl::StrCat("short write to ", tmp));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    return absl::UnavailableError(absl::StrCat(
        "cannot replace ", path, ": ", std::strerror(errno)));
  }
  return absl::OkStatus();
}

absl::StatusOr<LedgerLock> LedgerLock::Acquire(const std::string& ledger_path) {
  const std::string lock_path = ledger_path + ".lock";
  const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    return absl::UnavailableError(absl::StrCat(
        "cannot open lock ", lock_path, ": ", std::strerror(errno)));
  }
  while (::flock(fd, LOCK_EX) != 0) {
    if (errno == EINTR) continue;
    const int err = errno;
    ::close(fd);
    return absl::UnavailableError(
        absl::StrCat("cannot lock ", lock_path, ": ", std::strerror(err)));
  }
  return LedgerLock(fd);
}

LedgerLock::LedgerLock(LedgerLock&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)) {}

LedgerLock& LedgerLock::operator=(LedgerLock&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

LedgerLock::~LedgerLock() {
  // Closing the descriptor releases the flock.
  if (fd_ >= 0) ::close(fd_);
}

}  // namespace sandbox_dp
