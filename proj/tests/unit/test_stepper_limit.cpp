#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "apsolve/errors.hpp"
#include "apsolve/stepper_limit.hpp"

using namespace apsolve;

TEST_CASE("constraint solve examples with R = x - J") {
    const Model m = make_preset("analytic-1d");
    auto solve = [&](double x, double v, double dt) {
        const std::vector<TraitPoint> p{{x, 0.0}};
        return solve_J_constraint(std::vector<double>{v}, p, m, dt, {0.0, 1.0}).J;
    };
    CHECK(solve(1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(solve(-1.0, 0.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(solve(0.0, 0.3, 0.01) == doctest::Approx(-30.0).epsilon(1e-13));
}

TEST_CASE("secant and bisection agree, and the constraint holds") {
    const Model m = make_preset("paper-1d");
    const Grid g = default_grid(m, 0.05, 0.05);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(0.0, 0.01);
    for (int k = 0; k < 30; ++k) {
        State v = State::sample(g, m.initial_datum);
        for (auto& x : v.values) x += d(rng);
        ConstraintSolveOptions bis;
        bis.secant = false;
        const auto a = solve_J_constraint(v, m, 5e-4, {0.0, 1.0});
        const auto b = solve_J_constraint(v, m, 5e-4, {0.0, 1.0}, bis);
        CHECK(a.J == doctest::Approx(b.J).epsilon(1e-12));
        double mn = INFINITY;
        for (std::size_t i = 0; i < v.values.size(); ++i)
            mn = std::min(mn, v.values[i] - 5e-4 * m.growth_rate(g.point_at(i), a.J));
        CHECK(std::abs(mn) <= 1e-12);
        CHECK(a.iterations <= b.iterations);
    }
}

TEST_CASE("bracket growth and failure without a sign change") {
    const Model m = make_preset("analytic-1d");
    const std::vector<TraitPoint> p{{0.0, 0.0}};
    // root at J = 50, far outside the initial bracket
    const auto r = solve_J_constraint(std::vector<double>{-0.5}, p, m, 0.01, {0.0, 1.0});
    CHECK(r.J == doctest::Approx(50.0).epsilon(1e-13));
    CHECK(r.expansions > 0);

    Model flat = m;
    flat.growth_rate = [](const TraitPoint& x, double) { return x[0]; };
    CHECK_THROWS_AS(solve_J_constraint(std::vector<double>{0.5}, p, flat, 0.01, {0.0, 1.0}), SolverFailure);
}

TEST_CASE("a limit step keeps the minimum at zero") {
    const Model m = make_preset("analytic-1d");
    const Grid g = default_grid(m, 0.05, 0.05);
    const State v = State::sample(g, m.initial_datum);
    const LimitStepResult r = step_limit(v, m, 5e-4, TruncationKind::extrapolated, {0.0, 1.0});
    CHECK(std::abs(r.state.min()) <= 1e-12);
    CHECK(r.state.grid == g);
    const LimitStepResult s = step_limit(v, m, 5e-4, TruncationKind::shrinking, {0.0, 1.0});
    CHECK(s.state.grid == g.shrunk());
}

TEST_CASE("a one-step limit run equals a single step") {
    const Model m = make_preset("paper-1d");
    LimitRunConfig cfg;
    cfg.model = m;
    cfg.run.T = 5e-4;
    cfg.run.dt = 5e-4;
    cfg.run.grid = default_grid(m, 0.05, 0.05);
    cfg.bracket = std::array<double, 2>{0.0, 1.0};
    const Trajectory t = run_limit(cfg);
    REQUIRE(t.steps == 1);
    const LimitStepResult s = step_limit(State::sample(*cfg.run.grid, m.initial_datum), m, 5e-4,
                                         TruncationKind::extrapolated, {0.0, 1.0});
    CHECK(t.scalar.front() == s.J);
    CHECK(t.final_state.values == s.state.values);
}

TEST_CASE("default bracket") {
    const Model m = make_preset("paper-1d");
    const auto b = default_J_bracket(m, default_grid(m, 0.05, 0.05));
    CHECK(b[0] == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(b[1] > 0.5);
    CHECK(b[1] < 0.5672);
}

TEST_CASE("constraint solve closed forms") {
    const Model lin = make_preset("analytic-1d");
    CHECK(solve_J_constraint(std::vector<double>{0.1}, std::vector<TraitPoint>{{0, 0}}, lin, 0.1, {0.0, 1.0}).J ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(solve_J_constraint(std::vector<double>{0.2, 0.0}, std::vector<TraitPoint>{{0, 0}, {1, 0}}, lin, 0.1,
                             {0.0, 2.0})
              .J == doctest::Approx(1.0).epsilon(1e-12));
    Model flat = lin;
    flat.growth_rate = [](const TraitPoint&, double J) { return -J; };
    const std::vector<double> v{0.4, 0.25, 0.9};
    const std::vector<TraitPoint> p{{0, 0}, {1, 0}, {2, 0}};
    CHECK(solve_J_constraint(v, p, flat, 0.05, {0.0, 1.0}).J == doctest::Approx(-5.0).epsilon(1e-12));
}
