#include "apsolve/stepper_limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apsolve/errors.hpp"
#include "apsolve/hamiltonian.hpp"
#include "apsolve/stepper_eps.hpp"
#include "run_loop.hpp"

namespace apsolve {

namespace {

constexpr int kMaxExpansions = 60;
constexpr int kMaxIterations = 300;
// Relative width at which the bracket counts as collapsed.
constexpr double kTight = 0x1p-50;

}  // namespace

ConstraintSolveResult solve_J_constraint(std::span<const double> v_tilde,
                                         std::span<const TraitPoint> points, const Model& m,
                                         double dt, std::array<double, 2> bracket,
                                         const ConstraintSolveOptions& opts) {
    if (!(dt > 0.0)) throw DomainError("constraint solve needs dt > 0");
    if (v_tilde.size() != points.size()) throw DomainError("constraint solve: mismatched array sizes");
    if (v_tilde.empty()) throw DomainError("constraint solve on an empty lattice");
    for (double v : v_tilde)
        if (!std::isfinite(v)) throw DomainError("constraint solve: non-finite state value");
    if (!std::isfinite(bracket[0]) || !std::isfinite(bracket[1]))
        throw DomainError("constraint solve: non-finite bracket");

    ConstraintSolveResult res;
    auto F = [&](double J) {
        ++res.iterations;
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v_tilde.size(); ++i)
            lo = std::min(lo, v_tilde[i] - dt * eval_model(m, points[i], J));
        return lo;
    };

    double a = std::min(bracket[0], bracket[1]), b = std::max(bracket[0], bracket[1]);
    double fa = F(a), fb = F(b);
    if (fa == 0.0 || fb == 0.0) {
        res.J = fa == 0.0 ? a : b;
        return res;
    }

    // Grow the bracket on the side where the sign is wrong.
    double width = std::max(b - a, 1.0);
    while (fa > 0.0 || fb < 0.0) {
        if (++res.expansions > kMaxExpansions)
            throw SolverFailure("constraint solve: no sign change found for J");
        if (fa > 0.0) {
            b = a, fb = fa;
            a -= width, fa = F(a);
        } else {
            a = b, fa = fb;
            b += width, fb = F(b);
        }
        width *= 2.0;
    }

    double c = a, fc = fa;
    int side = 0;  // Illinois: which end was kept last time
    double last = std::numeric_limits<double>::quiet_NaN();
    while (res.iterations < kMaxIterations) {
        const double scale = std::max({1.0, std::abs(a), std::abs(b)});
        if (b - a <= kTight * scale) break;
        double next = 0.5 * (a + b);
        if (opts.secant) {
            const double s = (a * fb - b * fa) / (fb - fa);
            if (std::isfinite(s) && s > a && s < b) next = s;
        }
        if (next <= a || next >= b) break;
        c = next;
        fc = F(c);
        if (fc == 0.0) break;
        if (opts.secant && std::abs(c - last) <= kTight * scale) break;
        last = c;
        if (fc < 0.0) {
            a = c, fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = c, fb = fc;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
    }
    if (fc != 0.0 && !(opts.secant && std::abs(fc) <= opts.tol_J)) {
        // Endpoint with the smaller residual; fa, fb may be Illinois-scaled, so recompute.
        const double ra = std::abs(F(a)), rb = std::abs(F(b));
        c = ra <= rb ? a : b;
        fc = std::min(ra, rb);
    }
    res.J = c;
    res.residual = std::abs(fc);
    if (!(res.residual <= opts.tol_J))
        throw SolverFailure("constraint solve: residual above tol_J");
    return res;
}

ConstraintSolveResult solve_J_constraint(const State& v_tilde, const Model& m, double dt,
                                         std::array<double, 2> bracket,
                                         const ConstraintSolveOptions& opts) {
    const auto pts = v_tilde.grid.points();
    return solve_J_constraint(v_tilde.values, pts, m, dt, bracket, opts);
}

LimitStepResult step_limit(const State& v, const Model& m, double dt, TruncationKind policy,
                           std::array<double, 2> bracket, const ConstraintSolveOptions& opts,
                           bool unsafe) {
    const MonotoneOptions mono{unsafe};
    State tilde = policy == TruncationKind::extrapolated
                      ? monotone_step(extrapolate_boundary(v), dt, 0.0, mono)
                      : monotone_step(v, dt, 0.0, mono);
    const auto pts = tilde.grid.points();
    LimitStepResult out;
    out.solve = solve_J_constraint(tilde.values, pts, m, dt, bracket, opts);
    out.J = out.solve.J;
    for (std::size_t k = 0; k < pts.size(); ++k) tilde.values[k] -= dt * eval_model(m, pts[k], out.J);
    out.state = std::move(tilde);
    return out;
}

std::array<double, 2> default_J_bracket(const Model& m, const Grid& grid) {
    const ExtremaRoots r = find_Im_IM(m, grid, {0.0, 1e3});
    if (r.ok()) return {r.I_m, r.I_M};
    return {0.0, 1.0};
}

Trajectory run_limit(const LimitRunConfig& cfg) {
    for (double t : cfg.run.snapshot_times)
        if (t < 0.0 || t > cfg.run.T + 1e-12) throw DomainError("snapshot time outside [0, T]");
    const Grid g0 = initial_run_grid(cfg.model, cfg.run);
    const double dt = make_time_grid(cfg.run.T, cfg.run.dt).dt;
    const std::array<double, 2> bracket = cfg.bracket ? *cfg.bracket : default_J_bracket(cfg.model, g0);

    ConstraintSolveOptions opts = cfg.solver;
    opts.tol_J = cfg.solver.tol_J * std::max(1.0, std::abs(bracket[1]));

    SolveCounters counters;
    auto step = [&](const State& v, long) {
        LimitStepResult r = step_limit(v, cfg.model, dt, cfg.run.truncation.kind, bracket, opts,
                                       cfg.run.unsafe);
        counters.iterations += r.solve.iterations;
        counters.max_iterations = std::max(counters.max_iterations, r.solve.iterations);
        if (r.solve.expansions > 0) ++counters.bisection_fallbacks;
        return detail::StepOutput{std::move(r.state), r.J};
    };
    // Nodes within tol_J of the minimum are all zeros of the constrained state.
    Trajectory traj = detail::run_scheme(cfg.model, cfg.run, g0, opts.tol_J, step);
    traj.counters = counters;
    return traj;
}

}  // namespace apsolve
