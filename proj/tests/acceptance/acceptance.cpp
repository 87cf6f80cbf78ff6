// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "apsolve/analysis.hpp"
#include "apsolve/hamiltonian.hpp"
#include "apsolve/model.hpp"
#include "apsolve/stepper_eps.hpp"
#include "apsolve/stepper_limit.hpp"
#include "random_state.hpp"

using namespace apsolve;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

template <class F>
double bisect_increasing(F f, double lo, double hi, int iters = 200) {
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Sup of x^2/(1+x^2) (or r^2/(1+r^2)) over the lattice, the only x-dependence of the preset rate.
double lattice_sup_ratio(const Grid& g) {
    double s = 0.0;
    for (const auto& x : g.points()) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        s = std::max(s, r2 / (1.0 + r2));
    }
    return s;
}

Outcome report_outcome(const StudyReport& rep) {
    Outcome o{rep.all_pass(), ""};
    std::ostringstream os;
    for (const auto& f : rep.fits)
        os << f.norm << " slope " << num(f.slope) << (f.pass ? "" : " (off)") << "; ";
    for (const auto& c : rep.checks)
        os << c.name << (c.detail.empty() ? "" : " [" + c.detail + "]") << (c.pass ? " ok; " : " FAILED; ");
    for (const auto& e : rep.entries)
        if (!e.failure.empty()) os << "run failure: " << e.failure << "; ";
    o.detail = os.str();
    return o;
}

// Monotonicity, Lipschitz preservation, sup-norm nonexpansiveness and commutation with
// constants of the explicit stage on random Lipschitz pairs under the CFL condition.
Outcome monotone_properties(int dim, int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double slack = 1e-12;
    int bad_order = 0, bad_lip = 0, bad_contr = 0, bad_shift = 0;
    for (int k = 0; k < pairs; ++k) {
        const double dx = 0.02 + 0.1 * unit(rng);
        const Grid g = dim == 1 ? Grid::line(2.0 * unit(rng) - 1.0, dx, 20 + static_cast<int>(30 * unit(rng)))
                                : Grid::plane({0.0, 0.0}, dx, 0.02 + 0.1 * unit(rng), 8, 6);
        const double L = 0.1 + 5.0 * unit(rng);
        const double eps = unit(rng) < 0.3 ? 0.0 : std::pow(10.0, -6.0 * unit(rng));
        const State u = testing::random_lipschitz(g, L, rng);
        const State w = testing::random_lipschitz(g, L, rng);
        State lower = w;
        for (std::size_t i = 0; i < lower.values.size(); ++i) lower.values[i] = std::min(u.values[i], w.values[i]);
        const double c = 20.0 * (unit(rng) - 0.5);
        State shifted = u;
        for (auto& x : shifted.values) x += c;

        double worst = 0.0;
        for (const State* s : {&u, &w, static_cast<const State*>(&lower)}) worst = std::max(worst, monotone_cfl_number(*s, 1.0, eps));
        const double step = (0.05 + 0.95 * unit(rng)) / worst;

        const State Su = monotone_step(u, step, eps);
        const State Sw = monotone_step(w, step, eps);
        const State Sl = monotone_step(lower, step, eps);
        const State Sc = monotone_step(shifted, step, eps);

        double sup_in = 0.0, sup_out = 0.0;
        for (std::size_t i = 0; i < u.values.size(); ++i) sup_in = std::max(sup_in, std::abs(u.values[i] - w.values[i]));
        for (std::size_t i = 0; i < Su.values.size(); ++i) {
            sup_out = std::max(sup_out, std::abs(Su.values[i] - Sw.values[i]));
            if (Sl.values[i] > Su.values[i] + slack || Sl.values[i] > Sw.values[i] + slack) ++bad_order;
            if (std::abs(Sc.values[i] - Su.values[i] - c) > slack * (1.0 + std::abs(c) + std::abs(Su.values[i])))
                ++bad_shift;
        }
        if (sup_out > sup_in + slack) ++bad_contr;
        for (const auto& [in, out] : {std::pair{&u, &Su}, std::pair{&w, &Sw}}) {
            const double L_in = grid_lipschitz(*in);
            if (grid_lipschitz(*out) > L_in + slack * (1.0 + L_in)) ++bad_lip;
        }
    }
    Outcome o;
    o.pass = bad_order == 0 && bad_lip == 0 && bad_contr == 0 && bad_shift == 0;
    o.detail = std::to_string(pairs) + " pairs (" + std::to_string(dim) + "D); violations: order " +
               std::to_string(bad_order) + ", lipschitz " + std::to_string(bad_lip) + ", sup-norm " +
               std::to_string(bad_contr) + ", constants " + std::to_string(bad_shift);
    return o;
}

Outcome criterion_1() { return monotone_properties(1, 1000, 101); }

Outcome criterion_2() {
    const Model m = make_preset("paper-1d");
    LimitRunConfig cfg;
    cfg.model = m;
    cfg.run.T = 1.0;
    cfg.run.dt = 5e-4;
    cfg.run.dx = 5e-2;
    cfg.run.truncation = {TruncationKind::shrinking, 0};
    const Grid g0 = initial_run_grid(m, cfg.run);
    const ModelConstants c = estimate_constants(m, g0, cfg.run.T);

    // I_M solves sup_x R(x, I) = 0, i.e. s e^{-I} = I with s the lattice sup of x^2/(1+x^2).
    const double s = lattice_sup_ratio(g0);
    const double oracle_IM = bisect_increasing([s](double I) { return I - s * std::exp(-I); }, 0.0, 1.0);
    const double omega = bisect_increasing([](double I) { return I - std::exp(-I); }, 0.0, 1.0);

    const auto [traj, inv] = run_limit_checked(cfg, c);
    Outcome o;
    const bool roots = std::abs(c.I_M - oracle_IM) <= 1e-9 && std::abs(c.I_M - omega) <= 1e-4 &&
                       std::abs(c.I_m) <= 1e-9;
    const bool bounds = inv.J_min >= c.I_m - 1e-8 && inv.J_max <= c.I_M + 1e-8;
    o.pass = roots && inv.max_abs_min <= 1e-10 && inv.max_decrease <= 1e-12 && bounds &&
             inv.lipschitz_excess <= 1e-8;
    o.detail = "I_M " + num(c.I_M) + " (oracle " + num(oracle_IM) + ", limit " + num(omega) + "); max|min v| " +
               num(inv.max_abs_min) + "; max J decrease " + num(inv.max_decrease) + "; J in [" + num(inv.J_min) +
               ", " + num(inv.J_max) + "]; Lipschitz excess " + num(inv.lipschitz_excess);
    return o;
}

StudyConfig baseline_study(const std::string& preset) {
    StudyConfig s;
    s.model = make_preset(preset);
    s.T = 1.0;
    s.dt = 5e-4;
    s.dx = 5e-2;
    return s;
}

Outcome criterion_3() { return report_outcome(ap_study(baseline_study("paper-1d"))); }

Outcome criterion_4() {
    const Model m = make_preset("paper-1d");
    Outcome o{true, ""};
    for (double eps : {1e-4, 1e-5, 1e-6}) {
        EpsRunConfig cfg;
        cfg.model = m;
        cfg.eps = eps;
        const Grid g0 = initial_run_grid(m, cfg.run);
        const ModelConstants c = estimate_constants(m, g0, cfg.run.T);
        const Trajectory t = run_eps(cfg);
        const auto [lo, hi] = std::minmax_element(t.scalar.begin(), t.scalar.end());
        const bool ok = *lo >= c.I_m / 2 - 1e-6 && *hi <= 2 * c.I_M + 1e-6;
        o.pass = o.pass && ok;
        o.detail += "eps " + num(eps) + ": I in [" + num(*lo) + ", " + num(*hi) + "] vs [" + num(c.I_m / 2) + ", " +
                    num(2 * c.I_M) + "]; ";
    }
    return o;
}

Outcome criterion_5() {
    LimitRunConfig cfg;
    cfg.model = make_preset("analytic-1d");
    const Trajectory t = run_limit(cfg);
    const auto jumps = detect_jumps(t.scalar, t.times);
    Outcome o;
    o.pass = jumps.size() == 1 && std::abs(jumps[0].t - 0.5) <= 2 * t.dt;
    o.detail = std::to_string(jumps.size()) + " jump(s)";
    for (const auto& j : jumps) o.detail += "; t " + num(j.t) + " size " + num(j.size);
    return o;
}

Outcome criterion_6() {
    StudyConfig s = baseline_study("analytic-1d");
    s.lambda = 1e-2;
    return report_outcome(convergence_study(s));
}

StudyReport ua_report() {
    StudyConfig s = baseline_study("paper-1d");
    s.lambda = 5e-2;
    return ua_study(s);
}

Outcome ua_subset(const StudyReport& rep, const std::vector<std::string>& names) {
    Outcome o{true, ""};
    for (const auto& c : rep.checks) {
        bool wanted = false;
        for (const auto& n : names) wanted = wanted || c.name.find(n) != std::string::npos;
        if (!wanted) continue;
        o.pass = o.pass && c.pass;
        o.detail += c.name + " [" + c.detail + "] " + (c.pass ? "ok" : "FAILED") + "; ";
    }
    for (const auto& e : rep.entries)
        if (!e.failure.empty()) {
            o.pass = false;
            o.detail += "run failure: " + e.failure + "; ";
        }
    if (o.detail.empty()) o.pass = false;
    return o;
}

Outcome criterion_9() { return report_outcome(truncation_study(baseline_study("paper-1d"))); }

Outcome criterion_10() {
    StudyConfig s = baseline_study("paper-2d");
    s.eps_list = {1e-2, 1e-4};
    s.track_start = TraitPoint{-0.2, -0.2};
    s.track_end = TraitPoint{2.0, 2.0};
    Outcome o = report_outcome(demo_2d_study(s));
    const Outcome p = monotone_properties(2, 1000, 202);
    o.pass = o.pass && p.pass;
    o.detail += p.detail;
    return o;
}

Outcome criterion_11() {
    Outcome o{true, ""};
    auto note = [&](const std::string& what, double got, double want) {
        const bool ok = std::abs(got - want) <= 1e-10;
        o.pass = o.pass && ok;
        o.detail += what + " " + num(got) + (ok ? "" : " (expected " + num(want) + ")") + "; ";
    };
    Model m = make_preset("analytic-1d");
    m.growth_rate_dI = {};

    // I: R = 0 closed form, then I = e^{-I} and I = 2 e^{-I} against bisection.
    m.growth_rate = [](const TraitPoint&, double) { return 0.0; };
    const std::vector<double> u3{0.2, 0.0, 0.5};
    const std::vector<TraitPoint> x3{{0, 0}, {1, 0}, {2, 0}};
    const std::vector<double> psi3{1.0, 1.0, 1.0};
    double closed = 0.0;
    for (double v : u3) closed += 0.5 * std::exp(-v / 0.1);
    note("I (R=0)", solve_I_implicit(u3, x3, psi3, 0.5, m, 0.1, 0.01).I, closed);

    m.growth_rate = [](const TraitPoint&, double I) { return -I; };
    const double w1 = bisect_increasing([](double I) { return I - std::exp(-I); }, 0.0, 1.0);
    note("I (one point)", solve_I_implicit(std::vector<double>{0.0}, std::vector<TraitPoint>{{0, 0}},
                                           std::vector<double>{1.0}, 1.0, m, 0.3, 0.3)
                              .I,
         w1);
    const double w2 = bisect_increasing([](double I) { return I - 2.0 * std::exp(-I); }, 0.0, 2.0);
    note("I (two points)", solve_I_implicit(std::vector<double>{0.0, 0.0}, std::vector<TraitPoint>{{0, 0}, {1, 0}},
                                            std::vector<double>{1.0, 1.0}, 1.0, m, 1.0, 1.0)
                               .I,
         w2);

    // J: closed forms.
    const Model lin = make_preset("analytic-1d");
    note("J (one point)", solve_J_constraint(std::vector<double>{0.1}, std::vector<TraitPoint>{{0, 0}}, lin, 0.1,
                                             {0.0, 1.0})
                              .J,
         -1.0);
    note("J (two points)", solve_J_constraint(std::vector<double>{0.2, 0.0}, std::vector<TraitPoint>{{0, 0}, {1, 0}},
                                              lin, 0.1, {0.0, 1.0})
                               .J,
         1.0);
    Model flat = lin;
    flat.growth_rate = [](const TraitPoint&, double J) { return -J; };
    note("J (x-independent)", solve_J_constraint(std::vector<double>{0.7, 0.3, 0.4},
                                                 std::vector<TraitPoint>{{0, 0}, {1, 0}, {2, 0}}, flat, 0.05,
                                                 {0.0, 1.0})
                                  .J,
         -0.3 / 0.05);
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> items{
        {"monotone operator properties", criterion_1},
        {"limit-scheme invariants on paper-1d", criterion_2},
        {"asymptotic preservation as eps -> 0", criterion_3},
        {"small-eps bounds on I", criterion_4},
        {"single jump of J at t = 0.5", criterion_5},
        {"first-order convergence of the limit scheme", criterion_6},
        {"uniform accuracy (stratification)", {}},
        {"non-uniformity witness for I", {}},
        {"shrinking vs extrapolated lattices", criterion_9},
        {"2D demo", criterion_10},
        {"scalar solver oracles", criterion_11},
    };

    std::optional<StudyReport> ua;
    auto ua_once = [&]() -> const StudyReport& {
        if (!ua) ua = ua_report();
        return *ua;
    };
    items[6].second = [&] { return ua_subset(ua_once(), {"stratified"}); };
    items[7].second = [&] { return ua_subset(ua_once(), {">= 1.8", "< 1.5"}); };

    int failures = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = items[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s %2zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", k + 1, items[k].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(items.size()) - failures, items.size());
    return failures == 0 ? 0 : 1;
}
