#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apsolve/grid.hpp"
#include "apsolve/model.hpp"
#include "apsolve/stepper_eps.hpp"
#include "apsolve/stepper_limit.hpp"
#include "apsolve/trajectory.hpp"

namespace apsolve {

// ---- norms -------------------------------------------------------------

/// max_i |a_i - b_i|; the grids must be identical.
double linf_grid_error(const State& a, const State& b);

/// L-infinity distance on the nodes of the coarser lattice (the other state is restricted).
double linf_nested_error(const State& coarse, const State& fine);

/// dt * sum_n |f_n - g_n|.
double l1_time_error(std::span<const double> f, std::span<const double> g, double dt);

double linf_time_error(std::span<const double> f, std::span<const double> g);

/// sum_n |f_{n+1} - f_n|.
double tv_seminorm(std::span<const double> f);

/// exp(-u/eps) pointwise; exponents below -700 give exactly 0.
State hopf_cole_density(const State& u, double eps);

/// Least-squares slope of log(err) against log(h). Needs >= 3 pairs, all positive.
double fit_rate(std::span<const std::pair<double, double>> pairs);

/// A scalar series sampled once per step: values[n-1] holds on (t_{n-1}, t_n].
struct StepSeries {
    double dt = 0.0;
    std::vector<double> values;
    double horizon() const { return dt * static_cast<double>(values.size()); }
};

struct SeriesDistance {
    double l1 = 0.0;
    double linf = 0.0;
    double tv = 0.0;  ///< total variation of the difference
};

/// Exact distances between two piecewise-constant series on [0, T], possibly
/// with different steps. Both must cover the same horizon.
SeriesDistance compare_series(const StepSeries& a, const StepSeries& b);

StepSeries scalar_series(const Trajectory& t);

// ---- jumps -------------------------------------------------------------

struct Jump {
    std::size_t step = 0;  ///< index n into the series (jump between n-1 and n)
    double t = 0.0;        ///< time of the first value after the jump
    double size = 0.0;     ///< signed change over the merged event
};

/// A jump is a step whose change exceeds `factor` times the median of the steps
/// that are not rounding noise. Consecutive flagged steps form one jump, reported at
/// its largest step.
std::vector<Jump> detect_jumps(std::span<const double> values, std::span<const double> times,
                               double factor = 10.0);

// ---- studies -----------------------------------------------------------

enum class StudyKind { ap, convergence, ua, truncation, demo_2d };
std::string to_string(StudyKind kind);

struct StudyConfig {
    Model model;
    double T = 1.0;
    double dt = 5e-4;
    double dx = 5e-2;
    TruncationPolicy truncation{};
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::vector<double> dt_list{4e-3, 2e-3, 1e-3, 5e-4};
    std::vector<double> dx_list{2e-1, 1e-1, 5e-2};
    /// dt/dx for the convergence study; dt = lambda * min(dx, dx^2/eps) for the UA study.
    std::optional<double> lambda;
    /// Reference step; defaults to the smallest swept step / 4.
    std::optional<double> dx_ref;
    double fit_eps_max = 1e-4;
    double rate_tolerance = 0.3;
    double min_u_tolerance = 0.1;
    ImplicitSolveOptions eps_solver;
    ConstraintSolveOptions limit_solver;
    /// demo-2d: where the argmin track should start and end, within track_radius.
    std::optional<TraitPoint> track_start, track_end;
    double track_radius = 0.5;
    /// Worker cap; 0 reads APSOLVE_THREADS, else the hardware count.
    int threads = 0;
};

struct StudyEntry {
    std::vector<std::pair<std::string, double>> params;  ///< e.g. {"eps", 1e-3}, {"dx", 0.1}
    std::vector<std::pair<std::string, double>> errors;  ///< norm name -> value
    std::string failure;                                 ///< non-empty when the run failed

    std::optional<double> param(const std::string& name) const;
    std::optional<double> error(const std::string& name) const;
};

struct SlopeFit {
    std::string norm;
    std::string axis;
    double range_lo = 0.0, range_hi = 0.0;
    int points = 0;
    double slope = 0.0;
    double expected = 1.0;
    double tolerance = 0.3;
    bool pass = false;
};

struct StudyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct StudyReport {
    StudyKind kind = StudyKind::ap;
    std::vector<StudyEntry> entries;
    std::vector<SlopeFit> fits;
    std::vector<StudyCheck> checks;
    std::string reference;  ///< how the reference runs were made
    std::string config_digest;

    bool all_pass() const;
    /// Entries that share a parameter value, in study order.
    std::vector<const StudyEntry*> where(const std::string& param, double value) const;
};

/// Errors of run_eps against run_limit on one lattice, over eps_list.
StudyReport ap_study(const StudyConfig& cfg);

/// run_limit at each dt in dt_list with dx = dt/lambda, against a dt_ref run.
StudyReport convergence_study(const StudyConfig& cfg);

/// run_eps over eps_list x dx_list with dt = lambda*min(dx, dx^2/eps), against dx_ref runs.
StudyReport ua_study(const StudyConfig& cfg);

/// Shrinking versus extrapolated lattices for every eps, compared with the step-halving
/// difference of the extrapolated run.
StudyReport truncation_study(const StudyConfig& cfg);

/// 2D runs of both schemes at eps_list, with the limit-scheme invariants.
StudyReport demo_2d_study(const StudyConfig& cfg);

/// Invariant checks of a limit-scheme trajectory.
struct LimitInvariantReport {
    double max_abs_min = 0.0;         ///< max_n |min_i v^n_i|
    double max_decrease = 0.0;        ///< max_n (J^n - J^{n+1}), n >= 1
    double J_min = 0.0, J_max = 0.0;
    double lipschitz_excess = 0.0;    ///< max_n (Lip(v^n) - L0 - t_n K)
};
/// Runs `cfg` with an observer that records the invariants.
std::pair<Trajectory, LimitInvariantReport> run_limit_checked(const LimitRunConfig& cfg,
                                                               const ModelConstants& consts);

/// Runs tasks 0..n-1 on up to `threads` workers (see StudyConfig::threads).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task);
int worker_count(int requested);

}  // namespace apsolve
