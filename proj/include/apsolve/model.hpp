#pragma once

#include <functional>
#include <string>
#include <vector>

#include "apsolve/grid.hpp"

namespace apsolve {

/// Problem data of the selection-mutation model in Hopf-Cole variables.
///
/// The callbacks are called concurrently by independent runs and must not carry
/// mutable shared state.
struct Model {
    using RateFn = std::function<double(const TraitPoint&, double)>;
    using FieldFn = std::function<double(const TraitPoint&)>;

    std::string name;
    int dim = 1;
    /// Lattice center and anchor of the coercivity envelope.
    TraitPoint x0{0.0, 0.0};
    /// Net growth rate R(x, I), decreasing in I.
    RateFn growth_rate;
    /// Positive weight psi(x) in I = integral of psi * exp(-u/eps).
    FieldFn weight;
    /// Initial datum u_in = v_in.
    FieldFn initial_datum;
    /// Optional d/dI R(x, I). Empty means centered finite differences.
    RateFn growth_rate_dI;
    /// Half-width of the default working domain around x0.
    double domain_halfwidth = 5.0;
};

/// Structural constants feeding the CFL conditions and the truncation radius.
struct ModelConstants {
    double L0 = 0.0;       ///< Lipschitz constant of u_in on the grid
    double K = 1.0;        ///< -K <= dR/dI <= -1/K, and |dR/dx| <= K
    double kappa = 0.0;    ///< max |R| + |D_x R| + |D_xx R| over the grid and I in [0, 2 I_M]
    double I_m = 0.0;
    double I_M = 1.0;
    bool a2_satisfied = true;  ///< false when min_x R or max_x R has no root on the bracket
    double a_low = 0.0, b_low = 0.0;    ///< a_low|x-x0| + b_low <= u_in
    double a_high = 0.0, b_high = 0.0;  ///< u_in <= a_high|x-x0| + b_high
    double psi_min = 1.0, psi_max = 1.0;
};

/// R(x, I); throws ModelError on a non-finite value.
double eval_model(const Model& m, const TraitPoint& x, double I);

/// d/dI R(x, I) from the model or a centered difference with step 1e-6*max(1,|I|).
double eval_model_dI(const Model& m, const TraitPoint& x, double I);

struct ExtremaRoots {
    double I_m = 0.0;
    double I_M = 0.0;
    bool I_m_found = false;
    bool I_M_found = false;
    std::string diagnostic;  ///< empty when both roots were bracketed

    bool ok() const { return I_m_found && I_M_found; }
};

/// Roots of I -> min_x R(x, I) and I -> max_x R(x, I), with min/max taken over the
/// grid nodes, by bisection on `bracket` to 1e-10 absolute. A missing sign change is
/// reported in `diagnostic` rather than thrown.
ExtremaRoots find_Im_IM(const Model& m, const Grid& grid, std::array<double, 2> bracket);

/// Scans the grid for L0, K, kappa, the (A2) roots and the coercivity envelope.
ModelConstants estimate_constants(const Model& m, const Grid& grid, double T);

/// "paper-1d", "analytic-1d" or "paper-2d". Throws DomainError for other names.
Model make_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Default working lattice of a model for steps dx, dy.
Grid default_grid(const Model& m, double dx, double dy);

}  // namespace apsolve
