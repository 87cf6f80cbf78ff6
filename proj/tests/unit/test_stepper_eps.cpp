#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "apsolve/errors.hpp"
#include "apsolve/hamiltonian.hpp"
#include "apsolve/stepper_eps.hpp"

using namespace apsolve;

namespace {

Model with_rate(Model::RateFn r) {
    Model m = make_preset("analytic-1d");
    m.growth_rate = std::move(r);
    m.growth_rate_dI = {};
    return m;
}

// Root of ln I = ln cell + log-sum-exp_i((-u_i + dt R(x_i, I)) / eps) by bisection on ln I,
// in long double.
double log_bisection(const std::vector<double>& u, const std::vector<TraitPoint>& x, double cell,
                     const Model& m, double eps, double dt) {
    auto g = [&](long double lnI) {
        const double I = static_cast<double>(std::exp(lnI));
        std::vector<long double> e(u.size());
        long double top = -INFINITY;
        for (std::size_t i = 0; i < u.size(); ++i) {
            e[i] = (-static_cast<long double>(u[i]) + dt * m.growth_rate(x[i], I)) / eps;
            top = std::max(top, e[i]);
        }
        long double s = 0.0L;
        for (auto v : e) s += std::exp(v - top);
        return lnI - std::log(static_cast<long double>(cell)) - top - std::log(s);
    };
    long double lo = -700.0L, hi = 700.0L;
    for (int k = 0; k < 300; ++k) {
        const long double mid = 0.5L * (lo + hi);
        (g(mid) < 0.0L ? lo : hi) = mid;
    }
    return static_cast<double>(std::exp(0.5L * (lo + hi)));
}

}  // namespace

TEST_CASE("implicit solve without selection is a plain quadrature") {
    const Model m = with_rate([](const TraitPoint&, double) { return 0.0; });
    const std::vector<double> u{0.3, 0.1, 0.7};
    const std::vector<TraitPoint> x{{0, 0}, {1, 0}, {2, 0}};
    const std::vector<double> psi{1.0, 2.0, 0.5};
    const double eps = 0.2, cell = 0.1;
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) expect += cell * psi[i] * std::exp(-u[i] / eps);
    const auto r = solve_I_implicit(u, x, psi, cell, m, eps, 1e-3);
    CHECK(r.I == doctest::Approx(expect).epsilon(1e-13));
    CHECK(r.residual <= 1e-12 * std::max(1.0, r.I));
}

TEST_CASE("implicit solve against closed-form roots") {
    const Model m = with_rate([](const TraitPoint&, double I) { return -I; });
    const std::vector<TraitPoint> x1{{0, 0}};
    const std::vector<double> one{1.0};
    // I = exp(-I)
    auto r = solve_I_implicit(std::vector<double>{0.0}, x1, one, 1.0, m, 0.1, 0.1);
    CHECK(r.I == doctest::Approx(0.5671432904097838).epsilon(1e-12));
    // I = 2 exp(-I), I e^I = 2
    const std::vector<TraitPoint> x2{{0, 0}, {1, 0}};
    r = solve_I_implicit(std::vector<double>{0.0, 0.0}, x2, std::vector<double>{1.0, 1.0}, 1.0, m, 0.1, 0.1);
    CHECK(r.I == doctest::Approx(0.8526055020137255).epsilon(1e-12));
    CHECK(r.I * std::exp(r.I) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("implicit solve across eps matches a log-form oracle") {
    const Model m = make_preset("paper-1d");
    const Grid g = default_grid(m, 0.05, 0.05);
    const State u0 = State::sample(g, m.initial_datum);
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const double dt = 5e-4;
        const auto r = solve_I_implicit(u0, m, eps, dt);
        const double oracle = log_bisection(u0.values, g.points(), g.cell_volume(), m, eps, dt);
        CHECK(std::isfinite(r.I));
        CHECK(r.I == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(r.iterations <= 60);
    }
}

TEST_CASE("tiny eps with strong selection does not overflow") {
    const Model m = with_rate([](const TraitPoint&, double I) { return 1.0 - I; });
    const std::vector<double> u{0.0};
    const std::vector<TraitPoint> x{{0, 0}};
    const double eps = 1e-6, dt = 1e-3, cell = 0.05;
    const auto r = solve_I_implicit(u, x, std::vector<double>{1.0}, cell, m, eps, dt);
    const double oracle = log_bisection(u, x, cell, m, eps, dt);
    CHECK(std::isfinite(r.I));
    CHECK(r.I == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(r.I < 1.0);
    CHECK(r.I > 0.99);
}

TEST_CASE("implicit solve responds monotonically to the state") {
    const Model m = make_preset("paper-1d");
    const Grid g = default_grid(m, 0.1, 0.1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 0.05);
    const State u = State::sample(g, m.initial_datum);
    for (int k = 0; k < 20; ++k) {
        State w = u;
        for (auto& v : w.values) v -= d(rng);
        const double Iu = solve_I_implicit(u, m, 1e-2, 1e-3).I;
        const double Iw = solve_I_implicit(w, m, 1e-2, 1e-3).I;
        CHECK(Iw >= Iu);
    }
}

TEST_CASE("constant state with a constant rate stays flat") {
    const Model m = with_rate([](const TraitPoint&, double I) { return 0.5 - I; });
    const Grid g = Grid::line(0.0, 0.1, 20);
    const State u = State::sample(g, [](const TraitPoint&) { return 1.0; });
    const EpsStepResult r = step_eps(u, m, 0.1, 1e-3, TruncationKind::extrapolated);
    CHECK(r.state.grid == g);
    for (double v : r.state.values) CHECK(v == doctest::Approx(r.state.values.front()).epsilon(1e-14));
    CHECK(r.state.values.front() == doctest::Approx(1.0 - 1e-3 * (0.5 - r.I)));

    const EpsStepResult s = step_eps(u, m, 0.1, 1e-3, TruncationKind::shrinking);
    CHECK(s.state.grid == g.shrunk());
}

TEST_CASE("a one-step run equals a single step") {
    const Model m = make_preset("paper-1d");
    EpsRunConfig cfg;
    cfg.model = m;
    cfg.eps = 1e-2;
    cfg.run.T = 5e-4;
    cfg.run.dt = 5e-4;
    cfg.run.grid = default_grid(m, 0.05, 0.05);
    const Trajectory t = run_eps(cfg);
    REQUIRE(t.steps == 1);
    const EpsStepResult s =
        step_eps(State::sample(*cfg.run.grid, m.initial_datum), m, cfg.eps, 5e-4, TruncationKind::extrapolated);
    CHECK(t.scalar.front() == s.I);
    CHECK(t.final_state.values == s.state.values);
}

TEST_CASE("run validation") {
    EpsRunConfig cfg;
    cfg.model = make_preset("analytic-1d");
    cfg.eps = 0.0;
    CHECK_THROWS_AS(run_eps(cfg), DomainError);
    cfg.eps = 0.1;
    cfg.run.snapshot_times = {2.0};
    CHECK_THROWS_AS(run_eps(cfg), DomainError);
}

TEST_CASE("short eps run keeps I bounded and snapshots requested times") {
    const Model m = make_preset("paper-1d");
    EpsRunConfig cfg;
    cfg.model = m;
    cfg.eps = 1e-3;
    cfg.run.T = 0.05;
    cfg.run.snapshot_times = {0.0, 0.025, 0.05};
    const Trajectory t = run_eps(cfg);
    CHECK(t.steps == 100);
    CHECK(t.snapshots.size() == 3);
    for (double I : t.scalar) {
        CHECK(I > 0.0);
        CHECK(I < 2.0);
    }
    CHECK(t.counters.max_iterations <= 10);
}

TEST_CASE("newton cost does not grow with 1/eps") {
    const Model m = make_preset("paper-1d");
    const Grid g = default_grid(m, 0.05, 0.05);
    const State u0 = State::sample(g, m.initial_datum);
    int lo = 1 << 30, hi = 0;
    for (double eps : {1.0, 1e-2, 1e-4, 1e-6}) {
        const EpsStepResult r = step_eps(u0, m, eps, 5e-4, TruncationKind::extrapolated);
        lo = std::min(lo, r.solve.iterations);
        hi = std::max(hi, r.solve.iterations);
        MESSAGE("eps=" << eps << " iterations=" << r.solve.iterations);
    }
    CHECK(hi <= 3 * lo);
}
