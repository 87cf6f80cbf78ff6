#pragma once

#include <optional>
#include <span>

#include "apsolve/grid.hpp"
#include "apsolve/model.hpp"
#include "apsolve/trajectory.hpp"

namespace apsolve {

struct ImplicitSolveOptions {
    /// Residual target |phi(I)| <= tol_phi * max(1, I).
    double tol_phi = 1e-12;
    int max_newton = 50;
    /// Absolute width at which the bisection fallback stops.
    double bisection_tol = 1e-13;
};

enum class ImplicitMethod { newton, log_newton, bisection };

struct ImplicitSolveResult {
    double I = 0.0;
    ImplicitMethod method = ImplicitMethod::newton;
    int iterations = 0;  ///< Newton + log-Newton + bisection evaluations
    double residual = 0.0;  ///< |phi(I)|
};

/// Root of phi(I) = I - cell * sum_i psi_i exp(-u_i/eps) exp(dt R(x_i, I)/eps).
///
/// phi is increasing, so the root is unique. Sums are evaluated with the largest
/// exponent factored out. Plain Newton runs first (from `warm_start`, else from the
/// R = 0 value); if it stalls, overflows or leaves I > 0 the log form
/// ln I = ln(cell) + ln(sum ...) is solved by Newton; bracketed bisection is the last
/// resort. Throws SolverFailure when no sign change is found within 60 doublings.
ImplicitSolveResult solve_I_implicit(std::span<const double> u_tilde,
                                     std::span<const TraitPoint> points,
                                     std::span<const double> psi, double cell_volume,
                                     const Model& m, double eps, double dt,
                                     std::optional<double> warm_start = std::nullopt,
                                     const ImplicitSolveOptions& opts = {});

ImplicitSolveResult solve_I_implicit(const State& u_tilde, const Model& m, double eps, double dt,
                                     std::optional<double> warm_start = std::nullopt,
                                     const ImplicitSolveOptions& opts = {});

struct EpsStepResult {
    State state;
    double I = 0.0;
    ImplicitSolveResult solve;
};

/// One step: u_tilde = monotone_step(u or its ghost-extended copy), I from the
/// implicit solve, then u_i = u_tilde_i - dt R(x_i, I). The shrinking policy
/// returns a lattice one layer smaller.
EpsStepResult step_eps(const State& u, const Model& m, double eps, double dt, TruncationKind policy,
                       std::optional<double> warm_start = std::nullopt,
                       const ImplicitSolveOptions& opts = {}, bool unsafe = false);

struct EpsRunConfig {
    Model model;
    double eps = 1e-2;
    RunOptions run;
    ImplicitSolveOptions solver;
};

/// Iterates step_eps N_t = T/dt times from u_in sampled on the lattice.
/// Failures are rethrown as SolverFailure carrying the step index.
Trajectory run_eps(const EpsRunConfig& cfg);

/// Initial lattice of a run, including the shrinking padding.
Grid initial_run_grid(const Model& m, const RunOptions& run);

}  // namespace apsolve
