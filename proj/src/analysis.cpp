#include "apsolve/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "apsolve/errors.hpp"

namespace apsolve {

double linf_grid_error(const State& a, const State& b) {
    if (!(a.grid == b.grid) || a.values.size() != b.values.size())
        throw DomainError("L-infinity error between states on different grids");
    double e = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) e = std::max(e, std::abs(a.values[k] - b.values[k]));
    return e;
}

double linf_nested_error(const State& coarse, const State& fine) {
    if (coarse.grid == fine.grid) return linf_grid_error(coarse, fine);
    return linf_grid_error(coarse, restrict_to(fine, coarse.grid));
}

double l1_time_error(std::span<const double> f, std::span<const double> g, double dt) {
    if (f.size() != g.size()) throw DomainError("time series of different lengths");
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) s += std::abs(f[n] - g[n]);
    return dt * s;
}

double linf_time_error(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size()) throw DomainError("time series of different lengths");
    double e = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) e = std::max(e, std::abs(f[n] - g[n]));
    return e;
}

double tv_seminorm(std::span<const double> f) {
    if (f.empty()) throw DomainError("total variation of an empty series");
    double s = 0.0;
    for (std::size_t n = 1; n < f.size(); ++n) s += std::abs(f[n] - f[n - 1]);
    return s;
}

State hopf_cole_density(const State& u, double eps) {
    if (!(eps > 0.0)) throw DomainError("density needs eps > 0");
    State n{u.grid, std::vector<double>(u.values.size())};
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        const double e = -u.values[k] / eps;
        n.values[k] = e < -700.0 ? 0.0 : std::exp(e);
    }
    return n;
}

double fit_rate(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3) throw DomainError("rate fit needs at least 3 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [h, e] : pairs) {
        if (!(h > 0.0) || !(e > 0.0) || !std::isfinite(h) || !std::isfinite(e))
            throw DomainError("rate fit needs positive finite entries");
        sx += std::log(h);
        sy += std::log(e);
    }
    const double n = static_cast<double>(pairs.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [h, e] : pairs) {
        const double dx = std::log(h) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    if (!(sxx > 0.0)) throw DomainError("rate fit needs at least two distinct h");
    return sxy / sxx;
}

SeriesDistance compare_series(const StepSeries& a, const StepSeries& b) {
    if (a.values.empty() || b.values.empty()) throw DomainError("comparison of an empty series");
    const double Ta = a.horizon(), Tb = b.horizon();
    const double T = std::max(Ta, Tb);
    if (std::abs(Ta - Tb) > 1e-9 * T) throw DomainError("series cover different time intervals");

    SeriesDistance d;
    const double snap = 1e-12 * T;
    std::size_t i = 0, j = 0;
    double t = 0.0, prev = 0.0;
    bool first = true;
    while (i < a.values.size() && j < b.values.size()) {
        const double ta = static_cast<double>(i + 1) * a.dt;
        const double tb = static_cast<double>(j + 1) * b.dt;
        const double next = std::min(ta, tb);
        const double diff = a.values[i] - b.values[j];
        d.l1 += std::abs(diff) * (next - t);
        d.linf = std::max(d.linf, std::abs(diff));
        if (!first) d.tv += std::abs(diff - prev);
        first = false;
        prev = diff;
        t = next;
        if (ta <= next + snap) ++i;
        if (tb <= next + snap) ++j;
    }
    return d;
}

StepSeries scalar_series(const Trajectory& t) { return {t.dt, t.scalar}; }

std::vector<Jump> detect_jumps(std::span<const double> values, std::span<const double> times,
                               double factor) {
    if (values.size() != times.size()) throw DomainError("jump detection: series and times differ in length");
    std::vector<Jump> jumps;
    if (values.size() < 2) return jumps;

    std::vector<double> steps(values.size(), 0.0);
    std::vector<double> real_steps;
    for (std::size_t n = 1; n < values.size(); ++n) {
        steps[n] = std::abs(values[n] - values[n - 1]);
        const double noise = 1e-9 * std::max({1.0, std::abs(values[n]), std::abs(values[n - 1])});
        if (steps[n] > noise) real_steps.push_back(steps[n]);
    }
    if (real_steps.empty()) return jumps;
    const std::size_t mid = real_steps.size() / 2;
    std::nth_element(real_steps.begin(), real_steps.begin() + static_cast<long>(mid), real_steps.end());
    const double threshold = factor * real_steps[mid];

    std::size_t n = 1;
    while (n < values.size()) {
        if (steps[n] <= threshold) {
            ++n;
            continue;
        }
        const std::size_t begin = n;
        std::size_t best = n;
        while (n < values.size() && steps[n] > threshold) {
            if (steps[n] > steps[best]) best = n;
            ++n;
        }
        jumps.push_back({best, times[best], values[n - 1] - values[begin - 1]});
    }
    return jumps;
}

std::string to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::ap: return "ap";
        case StudyKind::convergence: return "convergence";
        case StudyKind::ua: return "ua";
        case StudyKind::truncation: return "truncation";
        case StudyKind::demo_2d: return "demo-2d";
    }
    return "?";
}

namespace {

std::optional<double> lookup(const std::vector<std::pair<std::string, double>>& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    return std::nullopt;
}

}  // namespace

std::optional<double> StudyEntry::param(const std::string& name) const { return lookup(params, name); }
std::optional<double> StudyEntry::error(const std::string& name) const { return lookup(errors, name); }

bool StudyReport::all_pass() const {
    for (const auto& e : entries)
        if (!e.failure.empty()) return false;
    for (const auto& f : fits)
        if (!f.pass) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::vector<const StudyEntry*> StudyReport::where(const std::string& param, double value) const {
    std::vector<const StudyEntry*> out;
    for (const auto& e : entries) {
        const auto p = e.param(param);
        if (p && std::abs(*p - value) <= 1e-12 * std::max(1.0, std::abs(value))) out.push_back(&e);
    }
    return out;
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("APSOLVE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_count(threads)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto body = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                task(k);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::pair<Trajectory, LimitInvariantReport> run_limit_checked(const LimitRunConfig& cfg,
                                                               const ModelConstants& consts) {
    LimitInvariantReport rep;
    LimitRunConfig c = cfg;
    auto user = cfg.run.observer;
    c.run.observer = [&](long n, double t, const State& v, double J) {
        rep.max_abs_min = std::max(rep.max_abs_min, std::abs(v.min()));
        rep.lipschitz_excess =
            std::max(rep.lipschitz_excess, grid_lipschitz(v) - (consts.L0 + t * consts.K));
        if (user) user(n, t, v, J);
    };
    rep.lipschitz_excess = -std::numeric_limits<double>::infinity();
    Trajectory traj = run_limit(c);
    const auto& J = traj.scalar;
    rep.J_min = *std::min_element(J.begin(), J.end());
    rep.J_max = *std::max_element(J.begin(), J.end());
    for (std::size_t n = 1; n < J.size(); ++n) rep.max_decrease = std::max(rep.max_decrease, J[n - 1] - J[n]);
    return {std::move(traj), rep};
}

// ---- study drivers -----------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

RunOptions base_run(const StudyConfig& c, double dt, double dx, TruncationPolicy policy) {
    RunOptions r;
    r.T = c.T;
    r.dt = dt;
    r.dx = dx;
    r.dy = dx;
    r.truncation = policy;
    return r;
}

struct RunSlot {
    std::optional<Trajectory> traj;
    std::string failure;
};

template <class Fn>
void run_into(RunSlot& slot, Fn&& fn) {
    try {
        slot.traj = fn();
    } catch (const std::exception& e) {
        slot.failure = e.what();
    }
}

Trajectory eps_run(const StudyConfig& c, double eps, double dt, double dx, TruncationPolicy policy) {
    EpsRunConfig e;
    e.model = c.model;
    e.eps = eps;
    e.run = base_run(c, dt, dx, policy);
    e.solver = c.eps_solver;
    return run_eps(e);
}

Trajectory limit_run(const StudyConfig& c, double dt, double dx, TruncationPolicy policy) {
    LimitRunConfig l;
    l.model = c.model;
    l.run = base_run(c, dt, dx, policy);
    l.solver = c.limit_solver;
    return run_limit(l);
}

/// Fit of `norm` against `axis` over entries whose axis value lies in [lo, hi].
SlopeFit fit_entries(const std::vector<StudyEntry>& entries, const std::string& norm,
                     const std::string& axis, double lo, double hi, double expected, double tol,
                     bool absolute = false) {
    SlopeFit f;
    f.norm = norm;
    f.axis = axis;
    f.range_lo = lo;
    f.range_hi = hi;
    f.expected = expected;
    f.tolerance = tol;
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : entries) {
        const auto h = e.param(axis);
        auto v = e.error(norm);
        if (!h || !v || *h < lo || *h > hi) continue;
        if (absolute) *v = std::abs(*v);
        pts.emplace_back(*h, *v);
    }
    f.points = static_cast<int>(pts.size());
    try {
        f.slope = fit_rate(pts);
        f.pass = std::abs(f.slope - expected) <= tol;
    } catch (const DomainError&) {
        f.slope = std::numeric_limits<double>::quiet_NaN();
        f.pass = false;
    }
    return f;
}

/// `norm` strictly decreasing along the entry order.
StudyCheck decreasing_check(const std::vector<const StudyEntry*>& seq, const std::string& norm,
                            const std::string& label) {
    StudyCheck c{label, true, ""};
    std::optional<double> prev;
    std::ostringstream os;
    for (const auto* e : seq) {
        const auto v = e->error(norm);
        if (!v) {
            c.pass = false;
            os << "missing ";
            continue;
        }
        os << fmt(*v) << ' ';
        if (prev && !(*v < *prev)) c.pass = false;
        prev = v;
    }
    c.detail = os.str();
    return c;
}

std::vector<const StudyEntry*> all_of(const std::vector<StudyEntry>& entries) {
    std::vector<const StudyEntry*> out;
    for (const auto& e : entries) out.push_back(&e);
    return out;
}

std::vector<double> sorted_desc(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

}  // namespace

StudyReport ap_study(const StudyConfig& cfg) {
    const auto eps_list = sorted_desc(cfg.eps_list);
    StudyReport rep;
    rep.kind = StudyKind::ap;
    rep.reference = "limit scheme, dt=" + fmt(cfg.dt) + " dx=" + fmt(cfg.dx) + " truncation=" +
                    to_string(cfg.truncation.kind);

    std::vector<RunSlot> slots(eps_list.size() + 1);
    parallel_for(slots.size(), cfg.threads, [&](std::size_t k) {
        if (k == 0) run_into(slots[0], [&] { return limit_run(cfg, cfg.dt, cfg.dx, cfg.truncation); });
        else run_into(slots[k], [&] { return eps_run(cfg, eps_list[k - 1], cfg.dt, cfg.dx, cfg.truncation); });
    });

    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        StudyEntry e;
        e.params = {{"eps", eps_list[k]}};
        const RunSlot& s = slots[k + 1];
        if (!slots[0].traj) e.failure = "limit run failed: " + slots[0].failure;
        else if (!s.traj) e.failure = s.failure;
        else {
            const Trajectory& u = *s.traj;
            const Trajectory& v = *slots[0].traj;
            const SeriesDistance d = compare_series(scalar_series(u), scalar_series(v));
            e.errors = {{"linf_u", linf_grid_error(u.final_state, v.final_state)},
                        {"l1_I", d.l1},
                        {"linf_I", d.linf},
                        {"tv_I", d.tv},
                        {"min_u", u.final_state.min()}};
        }
        rep.entries.push_back(std::move(e));
    }

    const double lo = 0.0, hi = cfg.fit_eps_max * (1.0 + 1e-9);
    rep.fits.push_back(fit_entries(rep.entries, "linf_u", "eps", lo, hi, 1.0, cfg.rate_tolerance));
    rep.fits.push_back(fit_entries(rep.entries, "l1_I", "eps", lo, hi, 1.0, cfg.rate_tolerance));
    rep.fits.push_back(fit_entries(rep.entries, "min_u", "eps", lo, hi, 1.0, cfg.min_u_tolerance, true));
    const auto seq = all_of(rep.entries);
    rep.checks.push_back(decreasing_check(seq, "linf_u", "linf_u decreases as eps decreases"));
    rep.checks.push_back(decreasing_check(seq, "l1_I", "l1_I decreases as eps decreases"));
    return rep;
}

StudyReport convergence_study(const StudyConfig& cfg) {
    const double lambda = cfg.lambda.value_or(1e-2);
    const auto dt_list = sorted_desc(cfg.dt_list);
    if (dt_list.empty()) throw DomainError("convergence study needs dt_list");
    double dx_ref = cfg.dx_ref.value_or(dt_list.back() / lambda / 4.0);
    const double dt_ref = lambda * dx_ref;
    if (!(dt_ref < dt_list.back())) throw DomainError("reference dt must be below every swept dt");

    StudyReport rep;
    rep.kind = StudyKind::convergence;
    rep.reference = "limit scheme, dt_ref=" + fmt(dt_ref) + " dx_ref=" + fmt(dx_ref);

    std::vector<RunSlot> slots(dt_list.size() + 1);
    parallel_for(slots.size(), cfg.threads, [&](std::size_t k) {
        if (k == 0) run_into(slots[0], [&] { return limit_run(cfg, dt_ref, dx_ref, cfg.truncation); });
        else {
            const double dt = dt_list[k - 1];
            run_into(slots[k], [&] { return limit_run(cfg, dt, dt / lambda, cfg.truncation); });
        }
    });

    for (std::size_t k = 0; k < dt_list.size(); ++k) {
        StudyEntry e;
        e.params = {{"dt", dt_list[k]}, {"dx", dt_list[k] / lambda}};
        const RunSlot& s = slots[k + 1];
        if (!slots[0].traj) e.failure = "reference run failed: " + slots[0].failure;
        else if (!s.traj) e.failure = s.failure;
        else {
            try {
                const Trajectory& v = *s.traj;
                const Trajectory& r = *slots[0].traj;
                const SeriesDistance d = compare_series(scalar_series(v), scalar_series(r));
                e.errors = {{"linf_v", linf_nested_error(v.final_state, r.final_state)},
                            {"l1_J", d.l1},
                            {"linf_J", d.linf},
                            {"tv_J", d.tv}};
            } catch (const std::exception& ex) {
                e.failure = ex.what();
            }
        }
        rep.entries.push_back(std::move(e));
    }
    const double inf = std::numeric_limits<double>::infinity();
    rep.fits.push_back(fit_entries(rep.entries, "linf_v", "dt", 0.0, inf, 1.0, cfg.rate_tolerance));
    rep.fits.push_back(fit_entries(rep.entries, "l1_J", "dt", 0.0, inf, 1.0, cfg.rate_tolerance));
    return rep;
}

StudyReport ua_study(const StudyConfig& cfg) {
    const double lambda = cfg.lambda.value_or(5e-2);
    const auto eps_list = sorted_desc(cfg.eps_list);
    const auto dx_list = sorted_desc(cfg.dx_list);
    if (dx_list.size() < 2) throw DomainError("UA study needs at least two dx values");
    const double dx_ref = cfg.dx_ref.value_or(dx_list.back() / 4.0);
    if (!(dx_ref < dx_list.back())) throw DomainError("dx_ref must be below every swept dx");
    auto step_for = [&](double dx, double eps) { return lambda * std::min(dx, dx * dx / eps); };

    StudyReport rep;
    rep.kind = StudyKind::ua;
    rep.reference = "eps scheme, dx_ref=" + fmt(dx_ref) + " dt=" + fmt(lambda) + "*min(dx, dx^2/eps)";

    const std::size_t per = dx_list.size() + 1;  // slot 0 of each block is the reference
    std::vector<RunSlot> slots(eps_list.size() * per);
    parallel_for(slots.size(), cfg.threads, [&](std::size_t k) {
        const double eps = eps_list[k / per];
        const std::size_t j = k % per;
        const double dx = j == 0 ? dx_ref : dx_list[j - 1];
        run_into(slots[k], [&] { return eps_run(cfg, eps, step_for(dx, eps), dx, cfg.truncation); });
    });

    for (std::size_t a = 0; a < eps_list.size(); ++a) {
        const RunSlot& ref = slots[a * per];
        for (std::size_t j = 0; j < dx_list.size(); ++j) {
            StudyEntry e;
            e.params = {{"eps", eps_list[a]}, {"dx", dx_list[j]}, {"dt", step_for(dx_list[j], eps_list[a])}};
            const RunSlot& s = slots[a * per + j + 1];
            if (!ref.traj) e.failure = "reference run failed: " + ref.failure;
            else if (!s.traj) e.failure = s.failure;
            else {
                try {
                    const SeriesDistance d = compare_series(scalar_series(*s.traj), scalar_series(*ref.traj));
                    e.errors = {{"linf_u", linf_nested_error(s.traj->final_state, ref.traj->final_state)},
                                {"l1_I", d.l1},
                                {"linf_I", d.linf},
                                {"tv_I", d.tv}};
                } catch (const std::exception& ex) {
                    e.failure = ex.what();
                }
            }
            rep.entries.push_back(std::move(e));
        }
    }

    // Stratification: at every eps the finer dx has the smaller error.
    for (const std::string norm : {"linf_u", "l1_I"}) {
        StudyCheck c{norm + " stratified in dx at every eps", true, ""};
        std::ostringstream os;
        for (double eps : eps_list) {
            const auto seq = rep.where("eps", eps);
            std::optional<double> prev;
            for (const auto* e : seq) {
                const auto v = e->error(norm);
                if (!v) {
                    c.pass = false;
                    continue;
                }
                if (prev && !(*v < *prev)) {
                    c.pass = false;
                    os << "eps=" << fmt(eps) << " dx=" << fmt(*e->param("dx")) << ' ';
                }
                prev = v;
            }
        }
        c.detail = c.pass ? "all eps" : "fails at " + os.str();
        rep.checks.push_back(std::move(c));
    }

    // Decrease of the eps-uniform error between the two finest dx.
    auto sup_over_eps = [&](const std::string& norm, double dx) {
        double s = 0.0;
        for (const auto* e : rep.where("dx", dx)) {
            const auto v = e->error(norm);
            if (!v) return std::numeric_limits<double>::quiet_NaN();
            s = std::max(s, *v);
        }
        return s;
    };
    const double coarse = dx_list[dx_list.size() - 2], fine = dx_list.back();
    auto factor = [&](const std::string& norm) { return sup_over_eps(norm, coarse) / sup_over_eps(norm, fine); };
    for (const std::string norm : {"linf_u", "l1_I"}) {
        const double f = factor(norm);
        rep.checks.push_back({norm + " uniform error decreases by >= 1.8", f >= 1.8, "factor " + fmt(f)});
    }
    for (const std::string norm : {"linf_I", "tv_I"}) {
        const double f = factor(norm);
        rep.checks.push_back({norm + " uniform error decreases by < 1.5", f < 1.5, "factor " + fmt(f)});
    }
    return rep;
}

StudyReport truncation_study(const StudyConfig& cfg) {
    const auto eps_list = sorted_desc(cfg.eps_list);
    StudyReport rep;
    rep.kind = StudyKind::truncation;
    rep.reference = "extrapolated run at dt/2, dx/2";

    const TruncationPolicy ext{TruncationKind::extrapolated, 0};
    const TruncationPolicy shr{TruncationKind::shrinking, 0};
    std::vector<RunSlot> slots(eps_list.size() * 3);
    parallel_for(slots.size(), cfg.threads, [&](std::size_t k) {
        const double eps = eps_list[k / 3];
        switch (k % 3) {
            case 0: run_into(slots[k], [&] { return eps_run(cfg, eps, cfg.dt, cfg.dx, ext); }); break;
            case 1: run_into(slots[k], [&] { return eps_run(cfg, eps, cfg.dt, cfg.dx, shr); }); break;
            default: run_into(slots[k], [&] { return eps_run(cfg, eps, 0.5 * cfg.dt, 0.5 * cfg.dx, ext); });
        }
    });

    for (std::size_t a = 0; a < eps_list.size(); ++a) {
        StudyEntry e;
        e.params = {{"eps", eps_list[a]}};
        const RunSlot* s = &slots[3 * a];
        if (!s[0].traj || !s[1].traj || !s[2].traj) {
            e.failure = !s[0].traj ? s[0].failure : !s[1].traj ? s[1].failure : s[2].failure;
        } else {
            try {
                e.errors = {{"diff_u", linf_grid_error(s[0].traj->final_state, s[1].traj->final_state)},
                            {"diff_I", linf_time_error(s[0].traj->scalar, s[1].traj->scalar)},
                            {"discretization_u", linf_nested_error(s[0].traj->final_state, s[2].traj->final_state)}};
            } catch (const std::exception& ex) {
                e.failure = ex.what();
            }
        }
        rep.entries.push_back(std::move(e));
    }

    StudyCheck below{"difference below discretization error at every eps", true, ""};
    for (const auto& e : rep.entries) {
        const auto d = e.error("diff_u"), h = e.error("discretization_u");
        if (!d || !h || !(*d <= *h)) below.pass = false;
    }
    rep.checks.push_back(below);
    rep.checks.push_back(decreasing_check(all_of(rep.entries), "diff_u", "difference decreases as eps decreases"));
    return rep;
}

StudyReport demo_2d_study(const StudyConfig& cfg) {
    if (cfg.model.dim != 2) throw DomainError("demo-2d needs a 2D model");
    const auto eps_list = sorted_desc(cfg.eps_list);
    StudyReport rep;
    rep.kind = StudyKind::demo_2d;
    rep.reference = "limit scheme, dt=" + fmt(cfg.dt) + " dx=dy=" + fmt(cfg.dx);

    const Grid g0 = default_grid(cfg.model, cfg.dx, cfg.dx);
    const ModelConstants consts = estimate_constants(cfg.model, g0, cfg.T);

    std::optional<LimitInvariantReport> inv;
    std::vector<RunSlot> slots(eps_list.size() + 1);
    parallel_for(slots.size(), cfg.threads, [&](std::size_t k) {
        if (k == 0) {
            run_into(slots[0], [&] {
                LimitRunConfig l;
                l.model = cfg.model;
                l.run = base_run(cfg, cfg.dt, cfg.dx, cfg.truncation);
                l.solver = cfg.limit_solver;
                auto [traj, r] = run_limit_checked(l, consts);
                inv = r;
                return traj;
            });
        } else {
            run_into(slots[k], [&] { return eps_run(cfg, eps_list[k - 1], cfg.dt, cfg.dx, cfg.truncation); });
        }
    });

    auto add_track = [](StudyEntry& e, const Trajectory& t) {
        e.errors.emplace_back("argmin_start_x", t.argmin.front()[0]);
        e.errors.emplace_back("argmin_start_y", t.argmin.front()[1]);
        e.errors.emplace_back("argmin_end_x", t.argmin.back()[0]);
        e.errors.emplace_back("argmin_end_y", t.argmin.back()[1]);
    };

    {
        StudyEntry e;
        e.params = {{"eps", 0.0}};
        if (!slots[0].traj) e.failure = slots[0].failure;
        else {
            e.errors = {{"max_abs_min_v", inv->max_abs_min},
                        {"max_J_decrease", inv->max_decrease},
                        {"J_min", inv->J_min},
                        {"J_max", inv->J_max},
                        {"lipschitz_excess", inv->lipschitz_excess}};
            add_track(e, *slots[0].traj);
        }
        rep.entries.push_back(std::move(e));
    }
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        StudyEntry e;
        e.params = {{"eps", eps_list[k]}};
        const RunSlot& s = slots[k + 1];
        if (!slots[0].traj) e.failure = "limit run failed: " + slots[0].failure;
        else if (!s.traj) e.failure = s.failure;
        else {
            const SeriesDistance d = compare_series(scalar_series(*s.traj), scalar_series(*slots[0].traj));
            e.errors = {{"l1_I", d.l1}, {"linf_u", linf_grid_error(s.traj->final_state, slots[0].traj->final_state)}};
            add_track(e, *s.traj);
        }
        rep.entries.push_back(std::move(e));
    }

    if (inv) {
        rep.checks.push_back({"constraint |min v| <= 1e-10", inv->max_abs_min <= 1e-10, fmt(inv->max_abs_min)});
        rep.checks.push_back({"J nondecreasing (1e-12 rounding slack)", inv->max_decrease <= 1e-12,
                              "max decrease " + fmt(inv->max_decrease)});
        rep.checks.push_back({"J within [I_m, I_M]",
                              inv->J_min >= consts.I_m - 1e-8 && inv->J_max <= consts.I_M + 1e-8,
                              "[" + fmt(inv->J_min) + ", " + fmt(inv->J_max) + "] vs [" + fmt(consts.I_m) +
                                  ", " + fmt(consts.I_M) + "]"});
        rep.checks.push_back({"Lipschitz bound L0 + tK", inv->lipschitz_excess <= 1e-8,
                              "excess " + fmt(inv->lipschitz_excess)});
    } else {
        rep.checks.push_back({"limit run", false, slots[0].failure});
    }
    auto near = [&](const StudyEntry& e, const std::string& which, const TraitPoint& p) {
        const auto x = e.error("argmin_" + which + "_x"), y = e.error("argmin_" + which + "_y");
        return x && y && std::hypot(*x - p[0], *y - p[1]) <= cfg.track_radius;
    };
    for (const auto& e : rep.entries) {
        const std::string who = *e.param("eps") == 0.0 ? "limit" : "eps=" + fmt(*e.param("eps"));
        if (cfg.track_start)
            rep.checks.push_back({who + " argmin starts near (" + fmt((*cfg.track_start)[0]) + ", " +
                                      fmt((*cfg.track_start)[1]) + ")",
                                  near(e, "start", *cfg.track_start), ""});
        if (cfg.track_end)
            rep.checks.push_back({who + " argmin ends near (" + fmt((*cfg.track_end)[0]) + ", " +
                                      fmt((*cfg.track_end)[1]) + ")",
                                  near(e, "end", *cfg.track_end), ""});
    }
    std::vector<const StudyEntry*> eps_entries;
    for (std::size_t k = 1; k < rep.entries.size(); ++k) eps_entries.push_back(&rep.entries[k]);
    rep.checks.push_back(decreasing_check(eps_entries, "l1_I", "l1_I decreases as eps decreases"));
    return rep;
}

}  // namespace apsolve
