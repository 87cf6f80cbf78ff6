#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "apsolve/grid.hpp"

namespace apsolve {

/// Time discretization and lattice handling shared by both schemes.
struct RunOptions {
    double T = 1.0;
    double dt = 5e-4;
    double dx = 5e-2;
    double dy = 5e-2;
    /// Working lattice; defaults to the model's domain with steps dx, dy.
    std::optional<Grid> grid;
    /// padding <= 0 with the shrinking policy means "N_t layers".
    TruncationPolicy truncation{};
    std::vector<double> snapshot_times;
    /// Skip the stability check of the explicit stage.
    bool unsafe = false;
    /// Called after every step with (n, t_n, state, scalar); n starts at 1.
    std::function<void(long, double, const State&, double)> observer;
};

struct Snapshot {
    double t = 0.0;
    State state;
};

struct SolveCounters {
    long iterations = 0;        ///< all scalar-solver iterations over the run
    long newton_fallbacks = 0;  ///< steps that left plain Newton (I solve only)
    long bisection_fallbacks = 0;
    int max_iterations = 0;     ///< largest per-step count
};

/// Time series of one run. Series are indexed n = 1..N_t.
struct Trajectory {
    Grid initial_grid;
    double dt = 0.0;
    long steps = 0;
    std::vector<double> times;
    std::vector<double> scalar;  ///< I^n or J^n
    std::vector<TraitPoint> argmin;
    std::vector<double> min_values;
    std::vector<Snapshot> snapshots;
    State initial_state;
    State final_state;
    SolveCounters counters;
};

/// Number of steps and the step actually used: dt is rounded down so that T/dt is an integer.
struct TimeGrid {
    long steps = 0;
    double dt = 0.0;
};
TimeGrid make_time_grid(double T, double dt);

}  // namespace apsolve
