#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apsolve/grid.hpp"
#include "apsolve/hamiltonian.hpp"

namespace apsolve {

/// Flat key=value run description. Lines starting with '#' (after optional
/// blanks) and blank lines are ignored; a '#' after a value starts a comment too.
struct RunConfig {
    std::string preset;
    std::optional<double> eps;
    double T = 1.0;
    double dt = 5e-4;
    double dx = 5e-2;
    std::optional<double> lambda;
    std::optional<CflMode> cfl_mode;
    std::optional<double> cfl_Lambda;
    std::optional<double> domain_halfwidth;
    TruncationKind truncation = TruncationKind::extrapolated;
    std::vector<double> snapshots;
    std::vector<double> eps_list;
    std::vector<double> dx_list;
    std::vector<double> dt_list;
    std::optional<double> dx_ref;
    double fit_eps_max = 1e-4;
    double tol_phi = 1e-12;
    double tol_J = 1e-12;
    std::string out_dir = "out";

    /// Keys that appeared in the text.
    std::set<std::string> given;
    /// Set when cfl_mode was given: the resolved pair and its condition values.
    std::optional<CflSpec> cfl;

    bool has(const std::string& key) const { return given.count(key) != 0; }
};

/// Every key accepted by parse_config.
const std::vector<std::string>& config_keys();

/// Parses and resolves a config. Throws ConfigError naming the key on unknown or
/// repeated keys, malformed numbers, out-of-range values and infeasible CFL requests.
RunConfig parse_config(std::string_view text);

/// Canonical key=value dump of the resolved config: every key except out_dir, fixed order.
std::string canonical_text(const RunConfig& cfg);

/// 16 hex digits of the 64-bit FNV-1a hash of canonical_text.
std::string config_digest(const RunConfig& cfg);

}  // namespace apsolve
