#pragma once

// Time loop shared by the eps scheme and the limit scheme.

#include <cmath>
#include <string>

#include "apsolve/errors.hpp"
#include "apsolve/model.hpp"
#include "apsolve/trajectory.hpp"

namespace apsolve::detail {

struct StepOutput {
    State state;
    double scalar = 0.0;
};

template <class StepFn>
Trajectory run_scheme(const Model& m, const RunOptions& run, const Grid& grid0, double tie_tol, StepFn&& step) {
    const TimeGrid tg = make_time_grid(run.T, run.dt);
    Trajectory traj;
    traj.initial_grid = grid0;
    traj.dt = tg.dt;
    traj.steps = tg.steps;
    traj.times.reserve(static_cast<std::size_t>(tg.steps));
    traj.scalar.reserve(static_cast<std::size_t>(tg.steps));
    traj.argmin.reserve(static_cast<std::size_t>(tg.steps));
    traj.min_values.reserve(static_cast<std::size_t>(tg.steps));

    std::vector<bool> taken(run.snapshot_times.size(), false);
    auto maybe_snapshot = [&](double t, const State& s) {
        for (std::size_t k = 0; k < run.snapshot_times.size(); ++k) {
            if (!taken[k] && std::abs(run.snapshot_times[k] - t) <= 0.5 * tg.dt) {
                taken[k] = true;
                traj.snapshots.push_back({t, s});
            }
        }
    };

    State u = State::sample(grid0, m.initial_datum);
    traj.initial_state = u;
    maybe_snapshot(0.0, u);

    for (long n = 1; n <= tg.steps; ++n) {
        const double t = static_cast<double>(n) * tg.dt;
        StepOutput out;
        try {
            out = step(u, n);
        } catch (const SolverFailure& e) {
            throw SolverFailure(std::string(e.what()) + " (step " + std::to_string(n) + ")", n);
        } catch (const std::exception& e) {
            throw SolverFailure(std::string(e.what()) + " (step " + std::to_string(n) + ")", n);
        }
        u = std::move(out.state);
        traj.times.push_back(t);
        traj.scalar.push_back(out.scalar);
        traj.argmin.push_back(u.grid.point_at(u.argmin(tie_tol)));
        traj.min_values.push_back(u.min());
        maybe_snapshot(t, u);
        if (run.observer) run.observer(n, t, u, out.scalar);
    }
    traj.final_state = std::move(u);
    return traj;
}

}  // namespace apsolve::detail
