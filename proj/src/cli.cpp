#include "apsolve/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "apsolve/analysis.hpp"
#include "apsolve/errors.hpp"
#include "apsolve/stepper_eps.hpp"
#include "apsolve/stepper_limit.hpp"

namespace fs = std::filesystem;

namespace apsolve {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"run-eps",  "run-limit", "ap-study",          "convergence-study",
                                                "ua-study", "demo-2d",   "compare-truncation"};
    return names;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["command_line"] = command_line;
    j["config_digest"] = config_digest;
    j["preset"] = preset;
    auto& p = j["parameters"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : parameters) {
        if (std::isfinite(v)) p[k] = v;
        else p[k] = nullptr;
    }
    for (const auto& [k, v] : labels) p[k] = v;
    auto& c = j["checks"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : checks) c[k] = v;
    j["files"] = files;
    j["duration_s"] = duration_s;
    j["exit_code"] = exit_code;
    j["status"] = exit_code == exit_ok              ? "ok"
                  : exit_code == exit_run_failure   ? "run-failed"
                  : exit_code == exit_config_error  ? "config-error"
                                                    : "study-failed";
    if (error) {
        j["error"] = {{"type", error->type}, {"key", error->key}, {"message", error->message}, {"step", error->step}};
    } else {
        j["error"] = nullptr;
    }
    return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
    out << manifest.to_json();
}

RunManifest config_failure(const std::string& command, const std::string& command_line,
                           const std::string& key, const std::string& message) {
    RunManifest m;
    m.command = command;
    m.command_line = command_line;
    m.exit_code = exit_config_error;
    m.error = ErrorRecord{"config", key, message, -1};
    return m;
}

namespace {

// ---- CSV ------------------------------------------------------------------

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

class CsvWriter {
public:
    CsvWriter(const std::string& dir, const std::string& name, std::vector<std::string>& files)
        : out_(fs::path(dir) / name, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + name);
        files.push_back(name);
    }

    void header(const std::vector<std::string>& cols) { row_text(cols); }

    void row(const std::vector<std::optional<double>>& values) {
        std::vector<std::string> cells;
        for (const auto& v : values) cells.push_back(v ? format_number(*v) : std::string());
        row_text(cells);
    }

    void row_text(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << csv_field(cells[k]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void write_trace(const std::string& dir, const Trajectory& t, const std::string& scalar_name,
                 std::vector<std::string>& files) {
    CsvWriter w(dir, "jtrace.csv", files);
    const bool two_d = t.initial_grid.dim == 2;
    if (two_d) w.header({"t", scalar_name, "argmin_x", "argmin_y"});
    else w.header({"t", scalar_name, "argmin_x"});
    for (std::size_t n = 0; n < t.times.size(); ++n) {
        if (two_d) w.row({t.times[n], t.scalar[n], t.argmin[n][0], t.argmin[n][1]});
        else w.row({t.times[n], t.scalar[n], t.argmin[n][0]});
    }
}

void write_snapshots(const std::string& dir, const Trajectory& t, std::vector<std::string>& files) {
    for (const auto& s : t.snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%.6g.csv", s.t);
        CsvWriter w(dir, name, files);
        const Grid& g = s.state.grid;
        if (g.dim == 2) w.header({"x", "y", "u"});
        else w.header({"x", "u"});
        for (std::size_t k = 0; k < g.size(); ++k) {
            const TraitPoint p = g.point_at(k);
            if (g.dim == 2) w.row({p[0], p[1], s.state.values[k]});
            else w.row({p[0], s.state.values[k]});
        }
    }
}

void write_study_table(const std::string& dir, const std::string& name, const StudyReport& rep,
                       const std::vector<std::string>& params, const std::vector<std::string>& norms,
                       std::vector<std::string>& files) {
    CsvWriter w(dir, name, files);
    std::vector<std::string> head = params;
    head.insert(head.end(), norms.begin(), norms.end());
    w.header(head);
    for (const auto& e : rep.entries) {
        std::vector<std::optional<double>> row;
        for (const auto& p : params) row.push_back(e.param(p));
        for (const auto& n : norms) row.push_back(e.error(n));
        w.row(row);
    }
}

void write_fits_and_checks(const std::string& dir, const StudyReport& rep, std::vector<std::string>& files) {
    if (!rep.fits.empty()) {
        CsvWriter w(dir, "fits.csv", files);
        w.header({"norm", "axis", "range_lo", "range_hi", "points", "slope", "expected", "tolerance", "pass"});
        for (const auto& f : rep.fits) {
            w.row_text({f.norm, f.axis, format_number(f.range_lo), format_number(f.range_hi),
                        std::to_string(f.points), format_number(f.slope), format_number(f.expected),
                        format_number(f.tolerance), f.pass ? "1" : "0"});
        }
    }
    CsvWriter w(dir, "checks.csv", files);
    w.header({"check", "pass", "detail"});
    for (const auto& c : rep.checks) w.row_text({c.name, c.pass ? "1" : "0", c.detail});
    bool failures = false;
    for (const auto& e : rep.entries) failures = failures || !e.failure.empty();
    if (failures) {
        CsvWriter f(dir, "failures.csv", files);
        f.header({"entry", "message"});
        for (std::size_t k = 0; k < rep.entries.size(); ++k)
            if (!rep.entries[k].failure.empty()) f.row_text({std::to_string(k), rep.entries[k].failure});
    }
}

void record_report(RunManifest& m, const StudyReport& rep) {
    for (const auto& f : rep.fits) m.checks.emplace_back("slope " + f.norm + " vs " + f.axis, f.pass);
    for (const auto& c : rep.checks) m.checks.emplace_back(c.name, c.pass);
    m.labels.emplace_back("reference", rep.reference);
    m.exit_code = rep.all_pass() ? exit_ok : exit_study_failure;
}

// ---- setup ------------------------------------------------------------------

Model model_of(const RunConfig& cfg) {
    Model m = make_preset(cfg.preset);
    if (cfg.domain_halfwidth) m.domain_halfwidth = *cfg.domain_halfwidth;
    return m;
}

RunOptions run_options(const RunConfig& cfg) {
    RunOptions r;
    r.T = cfg.T;
    r.dt = cfg.dt;
    r.dx = cfg.dx;
    r.dy = cfg.dx;
    r.truncation = {cfg.truncation, 0};
    r.snapshot_times = cfg.snapshots;
    return r;
}

StudyConfig study_config(const RunConfig& cfg, int threads) {
    StudyConfig s;
    s.model = model_of(cfg);
    s.T = cfg.T;
    s.dt = cfg.dt;
    s.dx = cfg.dx;
    s.truncation = {cfg.truncation, 0};
    if (!cfg.eps_list.empty()) s.eps_list = cfg.eps_list;
    if (!cfg.dx_list.empty()) s.dx_list = cfg.dx_list;
    if (!cfg.dt_list.empty()) s.dt_list = cfg.dt_list;
    s.lambda = cfg.lambda;
    s.dx_ref = cfg.dx_ref;
    s.fit_eps_max = cfg.fit_eps_max;
    s.eps_solver.tol_phi = cfg.tol_phi;
    s.limit_solver.tol_J = cfg.tol_J;
    s.threads = threads;
    return s;
}

void describe_run(RunManifest& m, const RunConfig& cfg, const Model& model, std::optional<double> eps) {
    const RunOptions run = run_options(cfg);
    const Grid g = initial_run_grid(model, run);
    const TimeGrid tg = make_time_grid(cfg.T, cfg.dt);
    const ModelConstants c = estimate_constants(model, g, cfg.T);
    const State u0 = State::sample(g, model.initial_datum);
    auto& p = m.parameters;
    if (eps) p.emplace_back("eps", *eps);
    p.emplace_back("T", cfg.T);
    p.emplace_back("dt", tg.dt);
    p.emplace_back("steps", static_cast<double>(tg.steps));
    p.emplace_back("dx", g.dx);
    if (g.dim == 2) p.emplace_back("dy", g.dy);
    p.emplace_back("lambda", tg.dt / g.dx);
    p.emplace_back("x_min", g.point(0)[0]);
    p.emplace_back("x_max", g.point(g.nx() - 1)[0]);
    if (g.dim == 2) {
        p.emplace_back("y_min", g.point(0, 0)[1]);
        p.emplace_back("y_max", g.point(0, g.ny() - 1)[1]);
    }
    p.emplace_back("monotone_cfl_initial", monotone_cfl_number(u0, tg.dt, eps.value_or(0.0)));
    p.emplace_back("L0", c.L0);
    p.emplace_back("K", c.K);
    p.emplace_back("kappa", c.kappa);
    p.emplace_back("I_m", c.I_m);
    p.emplace_back("I_M", c.I_M);
    p.emplace_back("script_CH_lambda", ch_constant(14.0 * (c.L0 + c.K * cfg.T) + 1.0) * tg.dt / g.dx);
    if (cfg.cfl) {
        p.emplace_back("cfl_lhs", cfg.cfl->lhs);
        if (cfg.cfl->mode == CflMode::eps_fixed) p.emplace_back("Lambda", cfg.cfl->Lambda);
        if (cfg.cfl->mode == CflMode::limit) p.emplace_back("cfl_multiplier_lhs", cfg.cfl->lhs_multiplier);
        m.labels.emplace_back("cfl_mode", to_string(cfg.cfl->mode));
    }
    p.emplace_back("tol_phi", cfg.tol_phi);
    p.emplace_back("tol_J", cfg.tol_J);
    m.labels.emplace_back("truncation", to_string(cfg.truncation));
}

void describe_study(RunManifest& m, const RunConfig& cfg, const StudyConfig& s) {
    auto& p = m.parameters;
    p.emplace_back("T", s.T);
    p.emplace_back("dt", s.dt);
    p.emplace_back("dx", s.dx);
    if (s.lambda) p.emplace_back("lambda", *s.lambda);
    if (s.dx_ref) p.emplace_back("dx_ref", *s.dx_ref);
    p.emplace_back("fit_eps_max", s.fit_eps_max);
    p.emplace_back("tol_phi", s.eps_solver.tol_phi);
    p.emplace_back("tol_J", s.limit_solver.tol_J);
    auto join = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_number(v[k]);
        return out;
    };
    m.labels.emplace_back("eps_list", join(s.eps_list));
    m.labels.emplace_back("dt_list", join(s.dt_list));
    m.labels.emplace_back("dx_list", join(s.dx_list));
    m.labels.emplace_back("truncation", to_string(cfg.truncation));
}

// ---- commands ---------------------------------------------------------------

void cmd_run_eps(RunManifest& m, const RunConfig& cfg) {
    if (!cfg.eps) throw ConfigError("eps", "required by run-eps");
    const Model model = model_of(cfg);
    describe_run(m, cfg, model, cfg.eps);
    EpsRunConfig e;
    e.model = model;
    e.eps = *cfg.eps;
    e.run = run_options(cfg);
    e.solver.tol_phi = cfg.tol_phi;
    const Trajectory t = run_eps(e);
    write_trace(cfg.out_dir, t, "I", m.files);
    write_snapshots(cfg.out_dir, t, m.files);
    m.parameters.emplace_back("newton_iterations", static_cast<double>(t.counters.iterations));
    m.parameters.emplace_back("newton_fallbacks", static_cast<double>(t.counters.newton_fallbacks));
}

void cmd_run_limit(RunManifest& m, const RunConfig& cfg) {
    const Model model = model_of(cfg);
    describe_run(m, cfg, model, std::nullopt);
    LimitRunConfig l;
    l.model = model;
    l.run = run_options(cfg);
    l.solver.tol_J = cfg.tol_J;
    const Trajectory t = run_limit(l);
    write_trace(cfg.out_dir, t, "J", m.files);
    write_snapshots(cfg.out_dir, t, m.files);
    const auto jumps = detect_jumps(t.scalar, t.times);
    CsvWriter w(cfg.out_dir, "jumps.csv", m.files);
    w.header({"t", "size", "argmin_x_before", "argmin_x_after"});
    for (const auto& j : jumps) {
        const std::size_t before = j.step > 0 ? j.step - 1 : 0;
        w.row({j.t, j.size, t.argmin[before][0], t.argmin[j.step][0]});
    }
    m.parameters.emplace_back("jumps", static_cast<double>(jumps.size()));
}

void cmd_study(RunManifest& m, const std::string& command, const RunConfig& cfg, int threads) {
    StudyConfig s = study_config(cfg, threads);
    const std::string& dir = cfg.out_dir;
    StudyReport rep;
    if (command == "ap-study") {
        describe_study(m, cfg, s);
        rep = ap_study(s);
        write_study_table(dir, "ap_errors.csv", rep, {"eps"}, {"linf_u", "l1_I", "linf_I", "min_u"}, m.files);
    } else if (command == "convergence-study") {
        describe_study(m, cfg, s);
        rep = convergence_study(s);
        write_study_table(dir, "convergence_errors.csv", rep, {"dt", "dx"}, {"linf_v", "l1_J", "linf_J", "tv_J"},
                          m.files);
    } else if (command == "ua-study") {
        describe_study(m, cfg, s);
        rep = ua_study(s);
        write_study_table(dir, "ua_errors.csv", rep, {"eps", "dx", "dt"}, {"linf_u", "l1_I", "linf_I", "tv_I"},
                          m.files);
    } else if (command == "compare-truncation") {
        describe_study(m, cfg, s);
        rep = truncation_study(s);
        write_study_table(dir, "truncation_errors.csv", rep, {"eps"}, {"diff_u", "diff_I", "discretization_u"},
                          m.files);
    } else {  // demo-2d
        if (s.model.dim != 2) throw ConfigError("preset", "demo-2d needs a 2D preset");
        if (cfg.eps_list.empty()) s.eps_list = {1e-2, 1e-4};
        if (cfg.preset == "paper-2d") {
            s.track_start = TraitPoint{-0.2, -0.2};
            s.track_end = TraitPoint{2.0, 2.0};
        }
        describe_study(m, cfg, s);
        rep = demo_2d_study(s);
        write_study_table(dir, "demo2d_summary.csv", rep, {"eps"},
                          {"l1_I", "linf_u", "argmin_start_x", "argmin_start_y", "argmin_end_x", "argmin_end_y"},
                          m.files);
    }
    write_fits_and_checks(dir, rep, m.files);
    record_report(m, rep);
}

}  // namespace

RunManifest dispatch(const std::string& command, const RunConfig& cfg, const std::string& command_line,
                     int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest m;
    m.command = command;
    m.command_line = command_line;
    m.config_digest = config_digest(cfg);
    m.preset = cfg.preset;

    try {
        fs::create_directories(cfg.out_dir);
        if (command == "run-eps") cmd_run_eps(m, cfg);
        else if (command == "run-limit") cmd_run_limit(m, cfg);
        else if (std::find(command_names().begin(), command_names().end(), command) != command_names().end())
            cmd_study(m, command, cfg, threads);
        else throw ConfigError("command", "unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        m.exit_code = exit_config_error;
        m.error = ErrorRecord{"config", e.key(), e.what(), -1};
    } catch (const SolverFailure& e) {
        m.exit_code = exit_run_failure;
        m.error = ErrorRecord{"solver", "", e.what(), e.step()};
    } catch (const StabilityError& e) {
        m.exit_code = exit_run_failure;
        m.error = ErrorRecord{"stability", "", e.what(), -1};
    } catch (const ModelError& e) {
        m.exit_code = exit_run_failure;
        m.error = ErrorRecord{"model", "", e.what(), -1};
    } catch (const DomainError& e) {
        m.exit_code = exit_run_failure;
        m.error = ErrorRecord{"domain", "", e.what(), -1};
    } catch (const std::exception& e) {
        m.exit_code = exit_run_failure;
        m.error = ErrorRecord{"internal", "", e.what(), -1};
    }
    m.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.files.push_back("manifest.json");
    write_manifest(m, cfg.out_dir);
    return m;
}

}  // namespace apsolve
