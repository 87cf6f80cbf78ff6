#pragma once

#include <optional>
#include <string>

#include "apsolve/grid.hpp"
#include "apsolve/model.hpp"

namespace apsolve {

/// Monotone upwind Hamiltonian max{H+(p), H-(q)} with H+(p) = p^2 for p > 0 and
/// H-(q) = q^2 for q < 0. p is the backward slope, q the forward slope.
inline double numerical_hamiltonian(double p, double q) {
    const double hp = p > 0.0 ? p * p : 0.0;
    const double hm = q < 0.0 ? q * q : 0.0;
    return hp > hm ? hp : hm;
}

/// Lipschitz constant of H+ and H- on [-L, L], summed: 4L.
double ch_constant(double L);

enum class CflMode { eps_fixed, ap_limit, limit };

std::string to_string(CflMode mode);
CflMode cfl_mode_from_string(const std::string& text);

/// Known quantities handed to resolve_cfl. At least one of dt, dx is required;
/// Lambda is the target ratio of the eps_fixed relation.
struct CflInputs {
    std::optional<double> dt;
    std::optional<double> dx;
    std::optional<double> lambda;  ///< dt / dx
    std::optional<double> Lambda;
};

/// A resolved (dt, dx) pair and the value of the stability condition(s) of its mode.
struct CflSpec {
    CflMode mode = CflMode::ap_limit;
    double eps = 0.0;
    double T = 1.0;
    double Lambda = 0.0;  ///< requested ratio (eps_fixed only)
    double dt = 0.0;
    double dx = 0.0;
    double lambda = 0.0;  ///< dt / dx after rounding
    long steps = 0;       ///< T / dt

    /// eps_fixed: 2 eps dt/dx^2 + C_H(L0 + T kappa) dt/dx.
    /// ap_limit:  2 dt/dx^2 + C_H(L0 + T K) dt/dx (worst case eps = 1).
    /// limit:     script-C_H dt/dx with script-C_H = C_H(14(L0 + K T) + 1).
    double lhs = 0.0;
    /// limit only: dt/dx * sqrt((L0 + T K)^2 + K).
    double lhs_multiplier = 0.0;
    bool satisfied = false;

    std::string describe() const;
};

/// Completes the (dt, dx) pair so the mode's condition holds, then rounds dt down
/// so that T / dt is an integer. When both dt and dx are given they are only
/// checked. Throws DomainError on infeasible input.
CflSpec resolve_cfl(CflMode mode, double eps, const ModelConstants& consts, double T,
                    const CflInputs& given);

struct MonotoneOptions {
    /// Skip the stability check. For experiments outside the proven regime only.
    bool unsafe = false;
};

/// Left-hand side 2 eps s (1/dx^2 [+ 1/dy^2]) + 4 L s (1/dx [+ 1/dy]) of the
/// monotonicity condition of the explicit stage, L being the grid Lipschitz constant.
double monotone_cfl_number(const State& u, double s, double eps);

/// Explicit monotone stage: at each interior node,
///   u_i + eps s (discrete Laplacian) - s H(backward slope, forward slope),
/// summed over axes in 2D. The result lives on u.grid.shrunk(): callers add a
/// ghost layer first (extrapolated policy) or accept the shrinking.
///
/// Throws StabilityError when monotone_cfl_number(u, s, eps) > 1 unless unsafe.
State monotone_step(const State& u, double s, double eps, MonotoneOptions opts = {});

}  // namespace apsolve
