#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lorprod {

/**
 * Command-line overrides layered on top of a scenario document. Unset fields
 * defer to the scenario (and the scenario's own defaults).
 */
struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool force = false;  // bypass the regularity certification inside push-up
  // When set, only tasks of these types run (the per-task subcommands).
  std::optional<std::vector<std::string>> only_tasks;
};

/**
 * Outcome of a scenario run: the exit status, the failure message (empty on
 * success), and the full artifact bundle keyed by file name — report.json
 * plus every CSV/JSON artifact the tasks produced. Running is pure; nothing
 * is written until write_bundle.
 */
struct RunResult {
  int exit_code = 0;    // 0 ok, 1 numerical failure, 2 schema violation, 3 unwritable
  std::string message;  // describes the failure for stderr
  std::map<std::string, std::string> artifacts;  // file name -> content
  std::string out_dir;                           // resolved output directory
};

// Parses and executes a scenario document (JSON text). Schema violations
// yield exit code 2 with a JSON-pointer message and an empty bundle; a
// failing gating task yields exit code 1 naming the task, with the bundle
// intact. Deterministic: identical text, overrides, and seed produce a
// byte-identical bundle.
RunResult run_scenario_text(const std::string& json_text, const RunOverrides& ov = {});

// Reads the file and delegates to run_scenario_text; an unreadable file is a
// schema-level failure (exit code 2).
RunResult run_scenario_file(const std::string& path, const RunOverrides& ov = {});

// Writes every artifact of a completed run under result.out_dir, creating
// the directory if needed. Returns 0, or 3 when the directory or any file
// cannot be written (message goes to the returned string if non-null).
int write_bundle(const RunResult& result, std::string* error = nullptr);

// Canonical task names, in the order the CLI exposes them as subcommands.
const std::vector<std::string>& task_names();

}  // namespace lorprod
