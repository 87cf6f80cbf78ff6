#include "apsolve/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "apsolve/errors.hpp"
#include "apsolve/model.hpp"

namespace apsolve {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "preset",   "eps",     "T",       "dt",          "dx",      "lambda",  "cfl_mode",
        "cfl_Lambda", "domain_halfwidth", "truncation", "snapshots", "eps_list", "dx_list",
        "dt_list",  "dx_ref",  "fit_eps_max", "tol_phi", "tol_J",   "out_dir"};
    return keys;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_number(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw ConfigError(key, "expected a number, got '" + text + "'");
    if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
    return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

void positive(double v, const std::string& key) { require(v > 0.0, key, "must be positive"); }

void eps_range(double v, const std::string& key) { require(v > 0.0 && v <= 1.0, key, "must lie in (0, 1]"); }

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + num(v[k]);
    return s;
}

void resolve_cfl_request(RunConfig& cfg) {
    Model m = make_preset(cfg.preset);
    if (cfg.domain_halfwidth) m.domain_halfwidth = *cfg.domain_halfwidth;
    const CflMode mode = *cfg.cfl_mode;
    if (mode == CflMode::eps_fixed) {
        require(cfg.eps.has_value(), "eps", "required by cfl_mode=eps_fixed");
        require(cfg.cfl_Lambda.has_value(), "cfl_Lambda", "required by cfl_mode=eps_fixed");
    }
    const Grid grid = default_grid(m, cfg.dx, cfg.dx);
    const ModelConstants consts = estimate_constants(m, grid, cfg.T);

    CflInputs in;
    if (cfg.has("dt") || (cfg.has("lambda") && !cfg.has("dx"))) in.dt = cfg.dt;
    if (cfg.has("dx") || !in.dt) in.dx = cfg.dx;
    in.lambda = cfg.lambda;
    in.Lambda = cfg.cfl_Lambda;

    const std::string key = cfg.has("lambda") ? "lambda" : cfg.has("dt") ? "dt" : cfg.has("dx") ? "dx" : "cfl_mode";
    CflSpec spec;
    try {
        spec = resolve_cfl(mode, cfg.eps.value_or(0.0), consts, cfg.T, in);
    } catch (const DomainError& e) {
        throw ConfigError(key, std::string("infeasible CFL request: ") + e.what());
    }
    // In limit mode only the multiplier condition is enforced up front; the
    // script-C_H bound is kept as a diagnostic and monotonicity is checked per step.
    const bool ok = mode == CflMode::limit ? spec.lhs_multiplier <= 1.0 + 1e-12 : spec.satisfied;
    if (!ok) throw ConfigError(key, "infeasible CFL request: " + spec.describe());
    cfg.dt = spec.dt;
    cfg.dx = spec.dx;
    cfg.cfl = spec;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::map<std::string, std::string> raw;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError(key, "unknown key");
        if (!raw.emplace(key, value).second) throw ConfigError(key, "given more than once");
        cfg.given.insert(key);
    }

    for (const auto& [key, value] : raw) {
        if (key == "preset") cfg.preset = value;
        else if (key == "eps") cfg.eps = to_number(key, value);
        else if (key == "T") cfg.T = to_number(key, value);
        else if (key == "dt") cfg.dt = to_number(key, value);
        else if (key == "dx") cfg.dx = to_number(key, value);
        else if (key == "lambda") cfg.lambda = to_number(key, value);
        else if (key == "cfl_Lambda") cfg.cfl_Lambda = to_number(key, value);
        else if (key == "domain_halfwidth") cfg.domain_halfwidth = to_number(key, value);
        else if (key == "snapshots") cfg.snapshots = to_list(key, value);
        else if (key == "eps_list") cfg.eps_list = to_list(key, value);
        else if (key == "dx_list") cfg.dx_list = to_list(key, value);
        else if (key == "dt_list") cfg.dt_list = to_list(key, value);
        else if (key == "dx_ref") cfg.dx_ref = to_number(key, value);
        else if (key == "fit_eps_max") cfg.fit_eps_max = to_number(key, value);
        else if (key == "tol_phi") cfg.tol_phi = to_number(key, value);
        else if (key == "tol_J") cfg.tol_J = to_number(key, value);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "cfl_mode") {
            try {
                cfg.cfl_mode = cfl_mode_from_string(value);
            } catch (const DomainError&) {
                throw ConfigError(key, "expected eps_fixed, ap_limit or limit");
            }
        } else if (key == "truncation") {
            try {
                cfg.truncation = truncation_kind_from_string(value);
            } catch (const DomainError&) {
                throw ConfigError(key, "expected shrinking or extrapolated");
            }
        }
    }

    require(cfg.has("preset") && !cfg.preset.empty(), "preset", "preset required");
    const auto names = preset_names();
    require(std::find(names.begin(), names.end(), cfg.preset) != names.end(), "preset",
            "unknown preset '" + cfg.preset + "'");
    if (cfg.eps) eps_range(*cfg.eps, "eps");
    positive(cfg.T, "T");
    positive(cfg.dt, "dt");
    positive(cfg.dx, "dx");
    if (cfg.lambda) positive(*cfg.lambda, "lambda");
    if (cfg.cfl_Lambda) require(*cfg.cfl_Lambda > 0.0 && *cfg.cfl_Lambda < 1.0, "cfl_Lambda", "must lie in (0, 1)");
    if (cfg.domain_halfwidth) positive(*cfg.domain_halfwidth, "domain_halfwidth");
    for (double e : cfg.eps_list) eps_range(e, "eps_list");
    for (double v : cfg.dx_list) positive(v, "dx_list");
    for (double v : cfg.dt_list) positive(v, "dt_list");
    if (cfg.dx_ref) positive(*cfg.dx_ref, "dx_ref");
    positive(cfg.fit_eps_max, "fit_eps_max");
    positive(cfg.tol_phi, "tol_phi");
    positive(cfg.tol_J, "tol_J");
    require(!cfg.out_dir.empty(), "out_dir", "must not be empty");
    for (double s : cfg.snapshots) require(s >= 0.0 && s <= cfg.T, "snapshots", "times must lie in [0, T]");

    if (cfg.lambda) {
        if (cfg.has("dt") && cfg.has("dx")) {
            require(std::abs(cfg.dt / cfg.dx - *cfg.lambda) <= 1e-9 * *cfg.lambda, "lambda",
                    "inconsistent with dt and dx");
        } else if (cfg.has("dt")) {
            cfg.dx = cfg.dt / *cfg.lambda;
        } else {
            cfg.dt = *cfg.lambda * cfg.dx;
        }
    }
    if (cfg.cfl_mode) resolve_cfl_request(cfg);
    return cfg;
}

std::string canonical_text(const RunConfig& cfg) {
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    std::ostringstream os;
    os << "preset=" << cfg.preset << '\n'
       << "eps=" << opt(cfg.eps) << '\n'
       << "T=" << num(cfg.T) << '\n'
       << "dt=" << num(cfg.dt) << '\n'
       << "dx=" << num(cfg.dx) << '\n'
       << "lambda=" << opt(cfg.lambda) << '\n'
       << "cfl_mode=" << (cfg.cfl_mode ? to_string(*cfg.cfl_mode) : "") << '\n'
       << "cfl_Lambda=" << opt(cfg.cfl_Lambda) << '\n'
       << "domain_halfwidth=" << opt(cfg.domain_halfwidth) << '\n'
       << "truncation=" << to_string(cfg.truncation) << '\n'
       << "snapshots=" << list(cfg.snapshots) << '\n'
       << "eps_list=" << list(cfg.eps_list) << '\n'
       << "dx_list=" << list(cfg.dx_list) << '\n'
       << "dt_list=" << list(cfg.dt_list) << '\n'
       << "dx_ref=" << opt(cfg.dx_ref) << '\n'
       << "fit_eps_max=" << num(cfg.fit_eps_max) << '\n'
       << "tol_phi=" << num(cfg.tol_phi) << '\n'
       << "tol_J=" << num(cfg.tol_J) << '\n';
    return os.str();
}

std::string config_digest(const RunConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canonical_text(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace apsolve
