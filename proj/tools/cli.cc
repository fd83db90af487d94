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

#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "sandbox_dp/audit_runner.h"
#include "sandbox_dp/ledger_file.h"
#include "sandbox_dp/scenario.h"

namespace sandbox_dp::cli {
namespace {

namespace fs = std::filesystem;

std::optional<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.close();
  return static_cast<bool>(out);
}

std::string DefaultLedgerPath() {
  const char* dir = std::getenv(kLedgerDirEnv);
  if (dir != nullptr && *dir != '\0') {
    return (fs::path(dir) / kLedgerFileName).string();
  }
  return kLedgerFileName;
}

struct SimulateArgs {
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string ledger;
  std::string out_dir = ".";
};

int Simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<std::string> text = ReadFile(a.scenario);
  if (!text.has_value()) {
    err << "error: cannot read " << a.scenario << "\n";
    return kIoError;
  }
  absl::StatusOr<Scenario> sc = ParseScenario(*text);
  if (!sc.ok()) {
    err << "schema error: " << sc.status().message() << "\n";
    return kSchemaError;
  }
  if (a.seed.has_value()) sc->seed = *a.seed;
  const bool uses_ledger = sc->api != ApiKind::kEventLevel;
  const std::string ledger_path = a.ledger.empty() ? DefaultLedgerPath() : a.ledger;

  // Held until the updated ledger is on disk.
  std::optional<LedgerLock> lock;
  std::optional<LedgerSnapshot> ledger;
  if (uses_ledger) {
    const fs::path parent = fs::path(ledger_path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
      err << "error: ledger directory " << parent.string() << " does not exist\n";
      return kIoError;
    }
    absl::StatusOr<LedgerLock> l = LedgerLock::Acquire(ledger_path);
    if (!l.ok()) {
      err << "error: " << l.status().message() << "\n";
      return kIoError;
    }
    lock.emplace(*std::move(l));
    absl::StatusOr<LedgerSnapshot> snap = ReadLedgerFile(ledger_path);
    if (snap.ok()) {
      ledger = *std::move(snap);
    } else if (!absl::IsNotFound(snap.status())) {
      err << "ledger conflict: " << snap.status().message() << "\n";
      return kLedgerConflict;
    }
  }

  absl::StatusOr<SimulationOutput> result = RunSimulation(*sc, ledger);
  if (!result.ok()) {
    if (absl::IsFailedPrecondition(result.status())) {
      err << "ledger conflict: " << result.status().message() << "\n";
      return kLedgerConflict;
    }
    err << "schema error: " << result.status().message() << "\n";
    return kSchemaError;
  }

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << a.out_dir << ": " << ec.message() << "\n";
    return kIoError;
  }
  const fs::path dir(a.out_dir);
  std::vector<std::pair<fs::path, const std::string*>> files = {
      {dir / "transcript.jsonl", &result->transcript_jsonl},
      {dir / "reports.jsonl", &result->reports_jsonl}};
  if (uses_ledger) {
    files.push_back({dir / "summaries.jsonl", &result->summaries_jsonl});
    files.push_back({dir / "trace.jsonl", &result->trace_jsonl});
  }
  for (const auto& [path, contents] : files) {
    if (!WriteFile(path, *contents)) {
      err << "error: cannot write " << path.string() << "\n";
      return kIoError;
    }
  }
  if (uses_ledger && result->ledger.has_value()) {
    if (absl::Status s = WriteLedgerFile(ledger_path, *result->ledger); !s.ok()) {
      err << "error: " << s.message() << "\n";
      return kIoError;
    }
  }
  for (const auto& [path, contents] : files) out << "wrote " << path.string() << "\n";
  if (uses_ledger) out << "ledger " << ledger_path << "\n";
  if (result->aborted_requests > 0) {
    err << result->aborted_requests << " aggregation request(s) aborted\n";
    return kRequestAborted;
  }
  return kOk;
}

struct AuditArgs {
  std::string config;
  std::string report;
  bool disable_noise = false;
};

int Audit(const AuditArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<std::string> text = ReadFile(a.config);
  if (!text.has_value()) {
    err << "error: cannot read " << a.config << "\n";
    return kIoError;
  }
  AuditOptions options;
  options.disable_noise = a.disable_noise;
  absl::StatusOr<AuditSummary> summary = RunAuditConfig(
      *text, fs::path(a.config).parent_path().string(), options);
  if (!summary.ok()) {
    err << "audit config error: " << summary.status().message() << "\n";
    return absl::IsInvalidArgument(summary.status()) ? kSchemaError : kIoError;
  }
  const std::string report = FormatAuditReport(*summary);
  if (a.report.empty()) {
    out << report;
  } else if (!WriteFile(a.report, report)) {
    err << "error: cannot write " << a.report << "\n";
    return kIoError;
  }
  if (!summary->pass) {
    err << "FAIL: " << *summary->first_failure << "\n";
    return kAuditFailed;
  }
  err << "PASS: " << summary->records.size() << " record(s)\n";
  return kOk;
}

int BudgetReport(const std::string& path_arg, std::ostream& out,
                 std::ostream& err) {
  const std::string path = path_arg.empty() ? DefaultLedgerPath() : path_arg;
  absl::StatusOr<LedgerSnapshot> snap = ReadLedgerFile(path);
  if (!snap.ok()) {
    err << "error: " << snap.status().message() << "\n";
    return absl::IsNotFound(snap.status()) ? kIoError : kLedgerConflict;
  }
  out << "ledger: " << path << "\n" << FormatBudgetReport(*snap);
  return kOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Privacy measurement simulator and auditor", "sandbox_dp"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a scenario file");
  simulate->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("--ledger", sim.ledger,
                       std::string("Ledger file (default $") + kLedgerDirEnv +
                           "/" + kLedgerFileName + ")");
  simulate->add_option("--out", sim.out_dir, "Output directory")
      ->capture_default_str();

  AuditArgs aud;
  CLI::App* audit = app.add_subcommand("audit", "Run an audit config");
  audit->add_option("config", aud.config, "Audit config JSON file")->required();
  audit->add_option("--report", aud.report,
                    "Write the JSONL report here instead of stdout");
  audit->add_flag("--disable-noise", aud.disable_noise,
                  "Run scenario checks with noise off");

  std::string ledger_path;
  CLI::App* budget =
      app.add_subcommand("budget-report", "Print remaining budgets in a ledger");
  budget->add_option("ledger", ledger_path,
                     std::string("Ledger file (default $") + kLedgerDirEnv + "/" +
                         kLedgerFileName + ")");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    }
    return kUsage;
  }

  if (simulate->parsed()) return Simulate(sim, out, err);
  if (audit->parsed()) return Audit(aud, out, err);
  if (budget->parsed()) return BudgetReport(ledger_path, out, err);
  err << app.help();
  return kUsage;
}

}  // namespace sandbox_dp::cli
