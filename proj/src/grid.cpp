#include "apsolve/grid.hpp"

#include <algorithm>
#include <cmath>

#include "apsolve/errors.hpp"
#include "apsolve/model.hpp"

namespace apsolve {

Grid Grid::line(double center, double dx, int n_half) {
    Grid g;
    g.dim = 1;
    g.center = {center, 0.0};
    g.dx = dx;
    g.dy = dx;
    g.nx_half = n_half;
    g.ny_half = 0;
    g.validate();
    return g;
}

Grid Grid::plane(TraitPoint center, double dx, double dy, int nx_half, int ny_half) {
    Grid g;
    g.dim = 2;
    g.center = center;
    g.dx = dx;
    g.dy = dy;
    g.nx_half = nx_half;
    g.ny_half = ny_half;
    g.validate();
    return g;
}

Grid Grid::covering(int dim, TraitPoint center, double dx, double dy, double halfwidth) {
    if (!(halfwidth > 0.0)) throw DomainError("grid half-width must be positive");
    if (!(dx > 0.0) || (dim == 2 && !(dy > 0.0))) throw DomainError("grid step must be positive");
    // Rounded down so that lattices of commensurate steps nest; the slack absorbs
    // round-off in e.g. 5 / 0.05.
    auto layers = [&](double h) { return static_cast<int>(std::floor(halfwidth / h + 1e-9)); };
    if (dim == 1) return line(center[0], dx, layers(dx));
    return plane(center, dx, dy, layers(dx), layers(dy));
}

TraitPoint Grid::point(std::size_t ix, std::size_t iy) const {
    const double x = center[0] + (static_cast<double>(ix) - nx_half) * dx;
    if (dim == 1) return {x, 0.0};
    return {x, center[1] + (static_cast<double>(iy) - ny_half) * dy};
}

std::vector<TraitPoint> Grid::points() const {
    std::vector<TraitPoint> out;
    out.reserve(size());
    for (std::size_t iy = 0; iy < ny(); ++iy)
        for (std::size_t ix = 0; ix < nx(); ++ix) out.push_back(point(ix, iy));
    return out;
}

Grid Grid::shrunk() const {
    Grid g = *this;
    g.nx_half -= 1;
    if (dim == 2) g.ny_half -= 1;
    return g;
}

Grid Grid::grown() const {
    Grid g = *this;
    g.nx_half += 1;
    if (dim == 2) g.ny_half += 1;
    return g;
}

void Grid::validate() const {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    if (!(dx > 0.0) || !std::isfinite(dx)) throw DomainError("grid step dx must be positive");
    if (dim == 2 && (!(dy > 0.0) || !std::isfinite(dy)))
        throw DomainError("grid step dy must be positive");
    if (nx_half < 0 || (dim == 2 && ny_half < 0)) throw DomainError("negative grid half-count");
}

State State::sample(const Grid& grid, const std::function<double(const TraitPoint&)>& f) {
    grid.validate();
    State s{grid, std::vector<double>(grid.size())};
    for (std::size_t k = 0; k < s.values.size(); ++k) s.values[k] = f(grid.point_at(k));
    return s;
}

std::size_t State::argmin(double tie_tol) const {
    if (values.empty()) throw DomainError("argmin of an empty state");
    const auto lowest = std::min_element(values.begin(), values.end());
    if (!(tie_tol > 0.0)) return static_cast<std::size_t>(lowest - values.begin());
    const double cut = *lowest + tie_tol;
    return static_cast<std::size_t>(
        std::find_if(values.begin(), values.end(), [cut](double v) { return v <= cut; }) - values.begin());
}

double State::min() const { return *std::min_element(values.begin(), values.end()); }

std::string to_string(TruncationKind kind) {
    return kind == TruncationKind::shrinking ? "shrinking" : "extrapolated";
}

TruncationKind truncation_kind_from_string(const std::string& text) {
    if (text == "shrinking") return TruncationKind::shrinking;
    if (text == "extrapolated") return TruncationKind::extrapolated;
    throw DomainError("unknown truncation policy '" + text + "'");
}

double grid_lipschitz(const State& u) {
    const Grid& g = u.grid;
    const std::size_t nx = g.nx(), ny = g.ny();
    double lip = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 1; ix < nx; ++ix)
            lip = std::max(lip, std::abs(u.at(ix, iy) - u.at(ix - 1, iy)) / g.dx);
    if (g.dim == 2)
        for (std::size_t iy = 1; iy < ny; ++iy)
            for (std::size_t ix = 0; ix < nx; ++ix)
                lip = std::max(lip, std::abs(u.at(ix, iy) - u.at(ix, iy - 1)) / g.dy);
    return lip;
}

namespace {

inline double cubic_ghost(double u1, double u2, double u3, double u4) {
    return 4.0 * u1 - 6.0 * u2 + 4.0 * u3 - u4;
}

}  // namespace

State extrapolate_boundary(const State& u) {
    const Grid& g = u.grid;
    if (u.values.size() != g.size()) throw DomainError("state size does not match its grid");
    if (g.nx() < 4 || (g.dim == 2 && g.ny() < 4))
        throw DomainError("boundary extrapolation needs at least 4 points per axis");

    const std::size_t nx = g.nx(), ny = g.ny();
    const std::size_t mx = nx + 2;

    // Along x, row by row.
    std::vector<double> wide(mx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double* row = &u.values[iy * nx];
        double* out = &wide[iy * mx];
        std::copy(row, row + nx, out + 1);
        out[0] = cubic_ghost(row[0], row[1], row[2], row[3]);
        out[mx - 1] = cubic_ghost(row[nx - 1], row[nx - 2], row[nx - 3], row[nx - 4]);
    }

    Grid outer = g;
    outer.nx_half += 1;
    if (g.dim == 1) return State{outer, std::move(wide)};

    // Along y, column by column, including the new x-ghost columns.
    outer.ny_half += 1;
    const std::size_t my = ny + 2;
    std::vector<double> full(mx * my);
    for (std::size_t iy = 0; iy < ny; ++iy)
        std::copy(&wide[iy * mx], &wide[iy * mx] + mx, &full[(iy + 1) * mx]);
    for (std::size_t ix = 0; ix < mx; ++ix) {
        auto col = [&](std::size_t iy) { return wide[iy * mx + ix]; };
        full[ix] = cubic_ghost(col(0), col(1), col(2), col(3));
        full[(my - 1) * mx + ix] = cubic_ghost(col(ny - 1), col(ny - 2), col(ny - 3), col(ny - 4));
    }
    return State{outer, std::move(full)};
}

State shrink(const State& u) {
    const Grid& g = u.grid;
    if (g.nx() < 5 || (g.dim == 2 && g.ny() < 5))
        throw DomainError("shrinking would leave fewer than 3 points per axis");
    Grid inner = g.shrunk();
    State out{inner, std::vector<double>(inner.size())};
    const std::size_t off_y = g.dim == 2 ? 1 : 0;
    for (std::size_t iy = 0; iy < inner.ny(); ++iy)
        for (std::size_t ix = 0; ix < inner.nx(); ++ix) out.at(ix, iy) = u.at(ix + 1, iy + off_y);
    return out;
}

State restrict_to(const State& fine, const Grid& coarse) {
    const Grid& f = fine.grid;
    if (f.dim != coarse.dim) throw DomainError("restriction between grids of different dimension");
    auto ratio = [](double big, double small) {
        const double r = big / small;
        const double rounded = std::round(r);
        if (rounded < 1.0 || std::abs(r - rounded) > 1e-6 * rounded)
            throw DomainError("coarse step is not an integer multiple of the fine step");
        return static_cast<long>(rounded);
    };
    const long rx = ratio(coarse.dx, f.dx);
    const long ry = coarse.dim == 2 ? ratio(coarse.dy, f.dy) : 1;
    for (int a = 0; a < coarse.dim; ++a) {
        const double h = a == 0 ? f.dx : f.dy;
        if (std::abs(coarse.center[a] - f.center[a]) > 1e-9 * h)
            throw DomainError("grids do not share their center");
    }
    if (static_cast<long>(coarse.nx_half) * rx > f.nx_half ||
        (coarse.dim == 2 && static_cast<long>(coarse.ny_half) * ry > f.ny_half))
        throw DomainError("coarse grid extends beyond the fine grid");

    State out{coarse, std::vector<double>(coarse.size())};
    for (std::size_t iy = 0; iy < coarse.ny(); ++iy) {
        const long fy = coarse.dim == 2 ? f.ny_half + (static_cast<long>(iy) - coarse.ny_half) * ry : 0;
        for (std::size_t ix = 0; ix < coarse.nx(); ++ix) {
            const long fx = f.nx_half + (static_cast<long>(ix) - coarse.nx_half) * rx;
            out.at(ix, iy) = fine.at(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
        }
    }
    return out;
}

double truncation_radius(const ModelConstants& consts, double eps, double dt, double dx, double T) {
    if (!(consts.a_low > 0.0)) throw DomainError("coercivity failure: a_low must be positive");
    if (!(dt > 0.0) || !(dx > 0.0)) throw DomainError("truncation radius needs dt > 0 and dx > 0");
    if (eps < 0.0 || eps > 1.0) throw DomainError("eps must lie in [0, 1]");
    const double e = std::max(eps, kEpsFloor);
    const double a = consts.a_low;
    const double b_T = consts.b_low - T * (a * a + consts.K);
    // Geometric tail sum on both sides: 2 psi_M exp(-(aX + b_T)/e) / (1 - exp(-a dx / e)).
    const double tail_den = -std::expm1(-a * dx / e);
    const double X = (-e * std::log(dt * tail_den / (2.0 * consts.psi_max)) - b_T) / a;
    return std::max(0.0, X);
}

}  // namespace apsolve
