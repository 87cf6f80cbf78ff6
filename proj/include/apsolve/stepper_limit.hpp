#pragma once

#include <array>
#include <optional>
#include <span>

#include "apsolve/grid.hpp"
#include "apsolve/model.hpp"
#include "apsolve/trajectory.hpp"

namespace apsolve {

struct ConstraintSolveOptions {
    /// Residual target |min_i(v_i - dt R(x_i, J))| <= tol_J.
    double tol_J = 1e-12;
    /// Illinois secant steps inside the bracket; false gives plain bisection.
    bool secant = true;
};

struct ConstraintSolveResult {
    double J = 0.0;
    int iterations = 0;
    double residual = 0.0;
    int expansions = 0;  ///< bracket growths needed to find a sign change
};

/// Root of F(J) = min_i (v_i - dt R(x_i, J)), which is increasing in J.
///
/// The bracket is grown geometrically around itself until F changes sign (at most
/// 60 times, else SolverFailure), then narrowed until it is a few ulps wide. The
/// result must satisfy |F(J)| <= tol_J, otherwise SolverFailure.
ConstraintSolveResult solve_J_constraint(std::span<const double> v_tilde,
                                         std::span<const TraitPoint> points, const Model& m,
                                         double dt, std::array<double, 2> bracket,
                                         const ConstraintSolveOptions& opts = {});

ConstraintSolveResult solve_J_constraint(const State& v_tilde, const Model& m, double dt,
                                         std::array<double, 2> bracket,
                                         const ConstraintSolveOptions& opts = {});

struct LimitStepResult {
    State state;
    double J = 0.0;
    ConstraintSolveResult solve;
};

/// v_tilde = monotone_step(v, dt, 0), then J from the constraint and
/// v_i = v_tilde_i - dt R(x_i, J). No renormalization of v.
LimitStepResult step_limit(const State& v, const Model& m, double dt, TruncationKind policy,
                           std::array<double, 2> bracket, const ConstraintSolveOptions& opts = {},
                           bool unsafe = false);

struct LimitRunConfig {
    Model model;
    RunOptions run;
    /// Search bracket for J; defaults to [I_m, I_M] on the initial lattice.
    std::optional<std::array<double, 2>> bracket;
    ConstraintSolveOptions solver;
};

Trajectory run_limit(const LimitRunConfig& cfg);

/// [I_m, I_M] when both roots exist on a default search range, else [0, 1].
std::array<double, 2> default_J_bracket(const Model& m, const Grid& grid);

}  // namespace apsolve
