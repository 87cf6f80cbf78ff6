#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace apsolve {

/// A point of trait space. In 1D the second coordinate is unused and kept at 0.
using TraitPoint = std::array<double, 2>;

/// Uniform lattice x_i = center + i*dx, i in [-n_half, n_half] (tensor product in 2D).
///
/// Values are stored x-fastest: flat index k = iy * nx() + ix with ix, iy counted
/// from the lower-left corner.
struct Grid {
    int dim = 1;
    TraitPoint center{0.0, 0.0};
    double dx = 0.05;
    double dy = 0.05;
    int nx_half = 0;
    int ny_half = 0;

    static Grid line(double center, double dx, int n_half);
    static Grid plane(TraitPoint center, double dx, double dy, int nx_half, int ny_half);
    /// Largest lattice of step dx (and dy) around `center` contained in the box of given half-width.
    static Grid covering(int dim, TraitPoint center, double dx, double dy, double halfwidth);

    std::size_t nx() const { return static_cast<std::size_t>(2 * nx_half + 1); }
    std::size_t ny() const { return dim == 2 ? static_cast<std::size_t>(2 * ny_half + 1) : 1; }
    std::size_t size() const { return nx() * ny(); }

    /// Quadrature weight of one node: dx in 1D, dx*dy in 2D.
    double cell_volume() const { return dim == 2 ? dx * dy : dx; }

    TraitPoint point(std::size_t ix, std::size_t iy = 0) const;
    TraitPoint point_at(std::size_t flat) const { return point(flat % nx(), flat / nx()); }
    std::vector<TraitPoint> points() const;

    /// Same lattice with one layer removed (shrunk) or added (grown) on every side.
    Grid shrunk() const;
    Grid grown() const;

    /// Throws DomainError when dx/dy are not positive or the dimension is not 1 or 2.
    void validate() const;

    bool operator==(const Grid& other) const = default;
};

/// Grid-valued unknown at one time level.
struct State {
    Grid grid;
    std::vector<double> values;

    static State sample(const Grid& grid, const std::function<double(const TraitPoint&)>& f);

    double at(std::size_t ix, std::size_t iy = 0) const { return values[iy * grid.nx() + ix]; }
    double& at(std::size_t ix, std::size_t iy = 0) { return values[iy * grid.nx() + ix]; }

    /// Flat index of the smallest value; ties go to the smallest index. Values within
    /// tie_tol of the minimum count as ties.
    std::size_t argmin(double tie_tol = 0.0) const;
    double min() const;
};

enum class TruncationKind { shrinking, extrapolated };

/// How the infinite lattice is cut to a finite one.
///
/// shrinking: start `padding` layers wider than the working domain and drop one
/// layer per step, so no boundary values are ever invented.
/// extrapolated: keep a fixed lattice and rebuild one ghost layer per step by
/// cubic extrapolation.
struct TruncationPolicy {
    TruncationKind kind = TruncationKind::extrapolated;
    int padding = 0;
};

std::string to_string(TruncationKind kind);
TruncationKind truncation_kind_from_string(const std::string& text);

/// Largest |u_i - u_{i-1}| / dx over adjacent pairs (both axes in 2D).
double grid_lipschitz(const State& u);

/// Adds one ghost layer per side: u_0 = 4u_1 - 6u_2 + 4u_3 - u_4 and its mirror,
/// applied along x then along y. Needs at least 4 points per axis.
State extrapolate_boundary(const State& u);

/// Drops the outermost layer on every side. Needs at least 3 points per axis.
State shrink(const State& u);

/// Restriction of `fine` to the nodes of `coarse`; both lattices must share their
/// center and the coarse step must be an integer multiple of the fine one.
State restrict_to(const State& fine, const Grid& coarse);

struct ModelConstants;

/// Floor applied to eps so the truncation radius stays bounded as eps -> 0.
inline constexpr double kEpsFloor = 1e-6;

/// Smallest radius X such that the lattice tail of the quadrature for I lies below dt,
/// using the coercivity envelope a_low|x-x0| + b_low - T*(a_low^2 + K) of the datum.
double truncation_radius(const ModelConstants& consts, double eps, double dt, double dx, double T);

}  // namespace apsolve
