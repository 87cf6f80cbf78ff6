#include "apsolve/stepper_eps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apsolve/errors.hpp"
#include "apsolve/hamiltonian.hpp"
#include "run_loop.hpp"

namespace apsolve {

TimeGrid make_time_grid(double T, double dt) {
    if (!(T > 0.0)) throw DomainError("T must be positive");
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    TimeGrid tg;
    tg.steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
    tg.dt = T / static_cast<double>(tg.steps);
    return tg;
}

namespace {

/// ln of the quadrature sum and its I-derivative, evaluated with the largest
/// exponent factored out.
struct LogSum {
    double value = 0.0;  ///< ln(cell * sum psi_i exp(e_i))
    double slope = 0.0;  ///< d value / dI
    bool finite = false;
};

class PhiEvaluator {
public:
    PhiEvaluator(std::span<const double> u, std::span<const TraitPoint> x, std::span<const double> psi,
                 double cell, const Model& m, double eps, double dt)
        : u_(u), x_(x), psi_(psi), log_cell_(std::log(cell)), m_(m), eps_(eps), dt_(dt),
          expo_(u.size()), dexpo_(u.size()) {}

    LogSum operator()(double I) {
        ++evaluations;
        double top = -std::numeric_limits<double>::infinity();
        const double scale = dt_ / eps_;
        for (std::size_t i = 0; i < u_.size(); ++i) {
            if (psi_[i] <= 0.0) {
                expo_[i] = -std::numeric_limits<double>::infinity();
                continue;
            }
            expo_[i] = (-u_[i] + dt_ * eval_model(m_, x_[i], I)) / eps_ + std::log(psi_[i]);
            dexpo_[i] = scale * eval_model_dI(m_, x_[i], I);
            top = std::max(top, expo_[i]);
        }
        LogSum out;
        if (!std::isfinite(top)) return out;
        double w = 0.0, dw = 0.0;
        for (std::size_t i = 0; i < u_.size(); ++i) {
            const double e = std::exp(expo_[i] - top);
            w += e;
            dw += e * dexpo_[i];
        }
        out.value = log_cell_ + top + std::log(w);
        out.slope = dw / w;
        out.finite = std::isfinite(out.value) && std::isfinite(out.slope);
        return out;
    }

    /// ln of the R = 0 value of the sum, used as default starting point.
    double log_mass() const {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < u_.size(); ++i)
            if (psi_[i] > 0.0) top = std::max(top, -u_[i] / eps_ + std::log(psi_[i]));
        double w = 0.0;
        for (std::size_t i = 0; i < u_.size(); ++i)
            if (psi_[i] > 0.0) w += std::exp(-u_[i] / eps_ + std::log(psi_[i]) - top);
        return log_cell_ + top + std::log(w);
    }

    int evaluations = 0;

private:
    std::span<const double> u_;
    std::span<const TraitPoint> x_;
    std::span<const double> psi_;
    double log_cell_;
    const Model& m_;
    double eps_, dt_;
    std::vector<double> expo_, dexpo_;
};

// Exponent above which exp() would overflow a double.
constexpr double kMaxLog = 700.0;
// Relative step below which an iterate is considered stationary.
constexpr double kStationary = 1e-15;

}  // namespace

ImplicitSolveResult solve_I_implicit(std::span<const double> u_tilde,
                                     std::span<const TraitPoint> points,
                                     std::span<const double> psi, double cell_volume,
                                     const Model& m, double eps, double dt,
                                     std::optional<double> warm_start,
                                     const ImplicitSolveOptions& opts) {
    if (!(eps > 0.0)) throw DomainError("implicit solve needs eps > 0");
    if (!(dt > 0.0)) throw DomainError("implicit solve needs dt > 0");
    if (u_tilde.size() != points.size() || psi.size() != points.size())
        throw DomainError("implicit solve: mismatched array sizes");
    if (u_tilde.empty()) throw DomainError("implicit solve on an empty lattice");
    for (double v : u_tilde)
        if (!std::isfinite(v)) throw DomainError("implicit solve: non-finite state value");

    PhiEvaluator eval(u_tilde, points, psi, cell_volume, m, eps, dt);
    auto tol = [&](double I) { return opts.tol_phi * std::max(1.0, I); };

    double I0 = 0.0;
    if (warm_start && *warm_start > 0.0 && std::isfinite(*warm_start)) {
        I0 = *warm_start;
    } else {
        const double lm = eval.log_mass();
        I0 = (std::isfinite(lm) && lm < kMaxLog && lm > -kMaxLog) ? std::exp(lm) : 1.0;
    }

    // Known bracket of the root: phi(lo) < 0 < phi(hi).
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    ImplicitSolveResult res;

    // Plain Newton on phi.
    {
        double I = I0, prev = std::numeric_limits<double>::infinity(), prevprev = prev;
        for (int it = 1; it <= opts.max_newton; ++it) {
            const LogSum ls = eval(I);
            if (!ls.finite || ls.value > kMaxLog) break;
            const double S = std::exp(ls.value);
            const double phi = I - S;
            const double dphi = 1.0 - S * ls.slope;
            if (std::abs(phi) <= tol(I)) {
                res = {I, ImplicitMethod::newton, eval.evaluations, std::abs(phi)};
                return res;
            }
            (phi < 0.0 ? lo : hi) = I;
            if (it >= 3 && std::abs(phi) > 0.5 * prevprev) break;  // stalled
            const double step = phi / dphi;
            const double next = I - step;
            if (!(next > 0.0) || !std::isfinite(next)) break;
            if (std::abs(step) <= kStationary * std::max(1.0, I)) {
                res = {next, ImplicitMethod::newton, eval.evaluations, std::abs(phi)};
                return res;
            }
            prevprev = prev;
            prev = std::abs(phi);
            I = next;
        }
    }

    // Newton on g(I) = ln I - ln(cell * sum), increasing in I.
    {
        double I = (lo > 0.0 && std::isfinite(hi)) ? std::sqrt(lo * hi)
                   : (lo > 0.0)                     ? lo
                   : std::isfinite(hi)              ? 0.5 * hi
                                                    : I0;
        for (int it = 1; it <= opts.max_newton; ++it) {
            const LogSum ls = eval(I);
            if (!ls.finite) break;
            const double g = std::log(I) - ls.value;
            const double phi = -I * std::expm1(-g);
            if (std::abs(phi) <= tol(I)) {
                res = {I, ImplicitMethod::log_newton, eval.evaluations, std::abs(phi)};
                return res;
            }
            (g < 0.0 ? lo : hi) = I;
            const double dg = 1.0 / I - ls.slope;
            double next = I - g / dg;
            if (!std::isfinite(next) || next <= lo || next >= hi) {
                // Outside the bracket: fall back to its (geometric) midpoint.
                next = (lo > 0.0 && std::isfinite(hi)) ? std::sqrt(lo * hi)
                       : (lo > 0.0)                     ? 2.0 * lo
                                                        : 0.5 * hi;
            }
            if (std::abs(next - I) <= kStationary * std::max(1.0, I)) {
                res = {next, ImplicitMethod::log_newton, eval.evaluations, std::abs(phi)};
                return res;
            }
            I = next;
        }
    }

    // Bracketed bisection on the sign of g.
    auto sign_g = [&](double I) {
        const LogSum ls = eval(I);
        if (!ls.finite) throw SolverFailure("implicit solve: non-finite quadrature sum");
        return std::log(I) - ls.value;
    };
    double a = lo > 0.0 ? lo : I0, b = std::isfinite(hi) ? hi : I0;
    int doublings = 0;
    while (sign_g(a) > 0.0) {
        a *= 0.5;
        if (++doublings > 60) throw SolverFailure("implicit solve: no sign change found for I");
    }
    doublings = 0;
    while (sign_g(b) < 0.0) {
        b *= 2.0;
        if (++doublings > 60) throw SolverFailure("implicit solve: no sign change found for I");
    }
    while (b - a > opts.bisection_tol) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (sign_g(mid) < 0.0 ? a : b) = mid;
    }
    const double I = 0.5 * (a + b);
    const LogSum ls = eval(I);
    res = {I, ImplicitMethod::bisection, eval.evaluations,
           std::abs(I - std::exp(std::min(ls.value, kMaxLog)))};
    return res;
}

namespace {

std::vector<double> sample_weight(const Model& m, const std::vector<TraitPoint>& pts) {
    std::vector<double> psi(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) psi[k] = m.weight(pts[k]);
    return psi;
}

}  // namespace

ImplicitSolveResult solve_I_implicit(const State& u_tilde, const Model& m, double eps, double dt,
                                     std::optional<double> warm_start,
                                     const ImplicitSolveOptions& opts) {
    const auto pts = u_tilde.grid.points();
    const auto psi = sample_weight(m, pts);
    return solve_I_implicit(u_tilde.values, pts, psi, u_tilde.grid.cell_volume(), m, eps, dt,
                            warm_start, opts);
}

EpsStepResult step_eps(const State& u, const Model& m, double eps, double dt, TruncationKind policy,
                       std::optional<double> warm_start, const ImplicitSolveOptions& opts,
                       bool unsafe) {
    if (!(eps > 0.0)) throw DomainError("step_eps needs eps > 0; use step_limit for eps = 0");
    const MonotoneOptions mono{unsafe};
    State tilde = policy == TruncationKind::extrapolated
                      ? monotone_step(extrapolate_boundary(u), dt, eps, mono)
                      : monotone_step(u, dt, eps, mono);

    const auto pts = tilde.grid.points();
    const auto psi = sample_weight(m, pts);
    EpsStepResult out;
    out.solve = solve_I_implicit(tilde.values, pts, psi, tilde.grid.cell_volume(), m, eps, dt,
                                 warm_start, opts);
    out.I = out.solve.I;
    for (std::size_t k = 0; k < pts.size(); ++k) tilde.values[k] -= dt * eval_model(m, pts[k], out.I);
    out.state = std::move(tilde);
    return out;
}

Grid initial_run_grid(const Model& m, const RunOptions& run) {
    Grid g = run.grid ? *run.grid : default_grid(m, run.dx, run.dy);
    if (g.dim != m.dim) throw DomainError("run lattice and model dimensions differ");
    if (run.truncation.kind == TruncationKind::shrinking) {
        const long steps = make_time_grid(run.T, run.dt).steps;
        const long pad = run.truncation.padding > 0 ? run.truncation.padding : steps;
        if (pad < steps) throw DomainError("shrinking policy needs padding >= N_t");
        g.nx_half += static_cast<int>(pad);
        if (g.dim == 2) g.ny_half += static_cast<int>(pad);
    }
    g.validate();
    return g;
}

Trajectory run_eps(const EpsRunConfig& cfg) {
    if (!(cfg.eps > 0.0) || cfg.eps > 1.0) throw DomainError("eps must lie in (0, 1]");
    for (double t : cfg.run.snapshot_times)
        if (t < 0.0 || t > cfg.run.T + 1e-12) throw DomainError("snapshot time outside [0, T]");
    const Grid g0 = initial_run_grid(cfg.model, cfg.run);
    const double dt = make_time_grid(cfg.run.T, cfg.run.dt).dt;

    std::optional<double> warm;
    SolveCounters counters;
    auto step = [&](const State& u, long) {
        EpsStepResult r = step_eps(u, cfg.model, cfg.eps, dt, cfg.run.truncation.kind, warm,
                                   cfg.solver, cfg.run.unsafe);
        warm = r.I;
        counters.iterations += r.solve.iterations;
        counters.max_iterations = std::max(counters.max_iterations, r.solve.iterations);
        if (r.solve.method != ImplicitMethod::newton) ++counters.newton_fallbacks;
        if (r.solve.method == ImplicitMethod::bisection) ++counters.bisection_fallbacks;
        return detail::StepOutput{std::move(r.state), r.I};
    };
    Trajectory traj = detail::run_scheme(cfg.model, cfg.run, g0, 0.0, step);
    traj.counters = counters;
    return traj;
}

}  // namespace apsolve
