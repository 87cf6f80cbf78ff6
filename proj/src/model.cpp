#include "apsolve/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apsolve/errors.hpp"

namespace apsolve {

double eval_model(const Model& m, const TraitPoint& x, double I) {
    const double r = m.growth_rate(x, I);
    if (!std::isfinite(r))
        throw ModelError("growth rate is not finite at x=(" + std::to_string(x[0]) + ", " +
                         std::to_string(x[1]) + "), I=" + std::to_string(I));
    return r;
}

double eval_model_dI(const Model& m, const TraitPoint& x, double I) {
    if (m.growth_rate_dI) return m.growth_rate_dI(x, I);
    const double h = 1e-6 * std::max(1.0, std::abs(I));
    return (eval_model(m, x, I + h) - eval_model(m, x, I - h)) / (2.0 * h);
}

namespace {

double min_rate(const Model& m, const std::vector<TraitPoint>& pts, double I) {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) r = std::min(r, eval_model(m, x, I));
    return r;
}

double max_rate(const Model& m, const std::vector<TraitPoint>& pts, double I) {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& x : pts) r = std::max(r, eval_model(m, x, I));
    return r;
}

// Root of a decreasing function on [lo, hi]; nullopt-like flag when no sign change.
template <class F>
bool bisect_decreasing(F&& f, double lo, double hi, double tol, double& root) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) { root = lo; return true; }
    if (fhi == 0.0) { root = hi; return true; }
    if (flo < 0.0 || fhi > 0.0) return false;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) { root = mid; return true; }
        (fm > 0.0 ? lo : hi) = mid;
    }
    root = 0.5 * (lo + hi);
    return true;
}

}  // namespace

ExtremaRoots find_Im_IM(const Model& m, const Grid& grid, std::array<double, 2> bracket) {
    if (grid.size() == 0) throw DomainError("empty grid");
    if (!(bracket[0] < bracket[1])) throw DomainError("bracket must satisfy lo < hi");
    const auto pts = grid.points();
    constexpr double tol = 1e-10;

    ExtremaRoots out;
    out.I_m_found = bisect_decreasing([&](double I) { return min_rate(m, pts, I); },
                                      bracket[0], bracket[1], tol, out.I_m);
    out.I_M_found = bisect_decreasing([&](double I) { return max_rate(m, pts, I); },
                                      bracket[0], bracket[1], tol, out.I_M);
    if (!out.I_m_found)
        out.diagnostic += "assumption (A2) violated on bracket: min_x R(x, I) has no sign change";
    if (!out.I_M_found) {
        if (!out.diagnostic.empty()) out.diagnostic += "; ";
        out.diagnostic += "assumption (A2) violated on bracket: max_x R(x, I) has no sign change";
    }
    return out;
}

ModelConstants estimate_constants(const Model& m, const Grid& grid, double /*T*/) {
    grid.validate();
    if (grid.size() == 0) throw DomainError("empty grid");
    if (grid.dim != m.dim) throw DomainError("grid and model dimensions differ");

    ModelConstants c;
    const auto pts = grid.points();
    const State u0 = State::sample(grid, m.initial_datum);

    c.L0 = grid_lipschitz(u0);

    c.psi_min = std::numeric_limits<double>::infinity();
    c.psi_max = 0.0;
    for (const auto& x : pts) {
        const double p = m.weight(x);
        c.psi_min = std::min(c.psi_min, p);
        c.psi_max = std::max(c.psi_max, p);
    }

    const ExtremaRoots roots = find_Im_IM(m, grid, {0.0, 1e3});
    c.a2_satisfied = roots.ok();
    c.I_m = roots.I_m_found ? roots.I_m : 0.0;
    c.I_M = roots.I_M_found ? roots.I_M : 1.0;
    if (c.I_m > c.I_M) c.I_m = c.I_M;

    // Samples of I used for the (A3) bound and for kappa.
    constexpr int kSamples = 41;
    auto sample_I = [](double lo, double hi, int k) { return lo + (hi - lo) * k / (kSamples - 1); };

    double dI_max = 0.0, dI_min = std::numeric_limits<double>::infinity(), dx_max = 0.0;
    double kappa = 0.0;
    const std::size_t nx = grid.nx(), ny = grid.ny();
    const double hx = grid.dx, hy = grid.dy;
    for (int k = 0; k < kSamples; ++k) {
        const double I_a3 = sample_I(0.5 * c.I_m, 2.0 * c.I_M, k);
        const double I_kappa = sample_I(0.0, 2.0 * c.I_M, k);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const TraitPoint x = grid.point(ix, iy);
                const double d = std::abs(eval_model_dI(m, x, I_a3));
                dI_max = std::max(dI_max, d);
                dI_min = std::min(dI_min, d);

                auto shifted = [&](int axis, double h) {
                    TraitPoint y = x;
                    y[axis] += h;
                    return y;
                };
                double grad = 0.0, lap = 0.0;
                const double r0 = eval_model(m, x, I_kappa);
                for (int a = 0; a < grid.dim; ++a) {
                    const double h = a == 0 ? hx : hy;
                    const double rp = eval_model(m, shifted(a, h), I_kappa);
                    const double rm = eval_model(m, shifted(a, -h), I_kappa);
                    grad += std::abs(rp - rm) / (2.0 * h);
                    lap += std::abs(rp - 2.0 * r0 + rm) / (h * h);
                    const double rpa = eval_model(m, shifted(a, h), I_a3);
                    const double rma = eval_model(m, shifted(a, -h), I_a3);
                    dx_max = std::max(dx_max, std::abs(rpa - rma) / (2.0 * h));
                }
                kappa = std::max(kappa, std::abs(r0) + grad + lap);
            }
        }
    }
    c.kappa = kappa;
    c.K = std::max({dI_max, dx_max, dI_min > 0.0 ? 1.0 / dI_min : 0.0});
    if (!(c.K > 0.0)) c.K = 1.0;

    // Coercivity envelope around the center node.
    auto dist = [&](const TraitPoint& x) {
        const double ax = x[0] - m.x0[0];
        const double ay = grid.dim == 2 ? x[1] - m.x0[1] : 0.0;
        return std::hypot(ax, ay);
    };
    double far = 0.0;
    for (const auto& x : pts) far = std::max(far, dist(x));
    const double umin = u0.min();

    double slope = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double r = dist(pts[k]);
        if (r >= 0.75 * far && r > 0.0) slope = std::min(slope, (u0.values[k] - umin) / r);
    }
    c.a_low = std::isfinite(slope) && slope > 0.0 ? 0.5 * slope : 0.0;
    c.a_high = grid.dim == 2 ? std::sqrt(2.0) * c.L0 : c.L0;
    c.b_low = std::numeric_limits<double>::infinity();
    c.b_high = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double r = dist(pts[k]);
        c.b_low = std::min(c.b_low, u0.values[k] - c.a_low * r);
        c.b_high = std::max(c.b_high, u0.values[k] - c.a_high * r);
    }
    return c;
}

namespace {

constexpr double kAlpha = 2.0;
constexpr double kBeta = -0.2;
constexpr double kDelta = 1.0;

double sq(double v) { return v * v; }

Model paper_1d() {
    Model m;
    m.name = "paper-1d";
    m.dim = 1;
    m.x0 = {1.0, 0.0};
    m.domain_halfwidth = 5.0;
    m.growth_rate = [](const TraitPoint& x, double I) {
        const double x2 = sq(x[0]);
        return std::exp(-I) * x2 / (1.0 + x2) - I;
    };
    m.growth_rate_dI = [](const TraitPoint& x, double I) {
        const double x2 = sq(x[0]);
        return -std::exp(-I) * x2 / (1.0 + x2) - 1.0;
    };
    m.weight = [](const TraitPoint&) { return 1.0; };
    m.initial_datum = [](const TraitPoint& x) {
        const double v = std::min(sq(x[0] - kBeta), sq(x[0] - kAlpha) + kDelta);
        return v / std::sqrt(1.0 + sq(x[0]));
    };
    return m;
}

Model analytic_1d() {
    Model m;
    m.name = "analytic-1d";
    m.dim = 1;
    m.x0 = {1.0, 0.0};
    m.domain_halfwidth = 5.0;
    m.growth_rate = [](const TraitPoint& x, double I) { return x[0] - I; };
    m.growth_rate_dI = [](const TraitPoint&, double) { return -1.0; };
    m.weight = [](const TraitPoint&) { return 1.0; };
    m.initial_datum = [](const TraitPoint& x) {
        return std::min(sq(x[0]), sq(x[0] - kAlpha) + kDelta);
    };
    return m;
}

Model paper_2d() {
    Model m;
    m.name = "paper-2d";
    m.dim = 2;
    m.x0 = {1.0, 1.0};
    m.domain_halfwidth = 5.0;
    m.growth_rate = [](const TraitPoint& x, double I) {
        const double r2 = sq(x[0]) + sq(x[1]);
        return std::exp(-I) * r2 / (1.0 + r2) - I;
    };
    m.growth_rate_dI = [](const TraitPoint& x, double I) {
        const double r2 = sq(x[0]) + sq(x[1]);
        return -std::exp(-I) * r2 / (1.0 + r2) - 1.0;
    };
    m.weight = [](const TraitPoint&) { return 1.0; };
    m.initial_datum = [](const TraitPoint& x) {
        const double to_beta = sq(x[0] - kBeta) + sq(x[1] - kBeta);
        const double to_alpha = sq(x[0] - kAlpha) + sq(x[1] - kAlpha) + kDelta;
        return std::min(to_beta, to_alpha) / std::sqrt(1.0 + sq(x[0]) + sq(x[1]));
    };
    return m;
}

}  // namespace

Model make_preset(const std::string& name) {
    if (name == "paper-1d") return paper_1d();
    if (name == "analytic-1d") return analytic_1d();
    if (name == "paper-2d") return paper_2d();
    throw DomainError("unknown model preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"paper-1d", "analytic-1d", "paper-2d"}; }

Grid default_grid(const Model& m, double dx, double dy) {
    return Grid::covering(m.dim, m.x0, dx, dy, m.domain_halfwidth);
}

}  // namespace apsolve
