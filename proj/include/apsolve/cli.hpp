#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apsolve/config.hpp"

namespace apsolve {

/// Exit statuses of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_run_failure = 1, exit_config_error = 2, exit_study_failure = 3 };

struct ErrorRecord {
    std::string type;  ///< config, stability, solver, model, domain, io, internal
    std::string key;   ///< offending config key, if any
    std::string message;
    long step = -1;    ///< time step of a run failure, -1 otherwise
};

struct RunManifest {
    std::string command;
    std::string command_line;
    std::string config_digest;
    std::string preset;
    /// Resolved numerical parameters, in output order.
    std::vector<std::pair<std::string, double>> parameters;
    std::vector<std::pair<std::string, std::string>> labels;  ///< non-numeric settings
    std::vector<std::pair<std::string, bool>> checks;         ///< study pass flags
    std::vector<std::string> files;                           ///< relative to out_dir
    double duration_s = 0.0;
    int exit_code = exit_ok;
    std::optional<ErrorRecord> error;

    std::string to_json() const;
};

const std::vector<std::string>& command_names();

/// Runs `command` for `cfg`, writes its CSV files and manifest.json into
/// cfg.out_dir and returns the manifest. Failures are reported through
/// exit_code and error rather than thrown.
RunManifest dispatch(const std::string& command, const RunConfig& cfg, const std::string& command_line,
                     int threads = 0);

/// Manifest for a config that could not be parsed.
RunManifest config_failure(const std::string& command, const std::string& command_line,
                           const std::string& key, const std::string& message);

void write_manifest(const RunManifest& manifest, const std::string& out_dir);

/// "%.17g".
std::string format_number(double v);

}  // namespace apsolve
