#include "apsolve/hamiltonian.hpp"

#include <cmath>
#include <sstream>

#include "apsolve/errors.hpp"

namespace apsolve {

double ch_constant(double L) {
    if (L < 0.0 || std::isnan(L)) throw DomainError("C_H(L) needs L >= 0");
    return 4.0 * L;
}

std::string to_string(CflMode mode) {
    switch (mode) {
        case CflMode::eps_fixed: return "eps_fixed";
        case CflMode::ap_limit: return "ap_limit";
        case CflMode::limit: return "limit";
    }
    return "?";
}

CflMode cfl_mode_from_string(const std::string& text) {
    if (text == "eps_fixed") return CflMode::eps_fixed;
    if (text == "ap_limit") return CflMode::ap_limit;
    if (text == "limit") return CflMode::limit;
    throw DomainError("unknown CFL mode '" + text + "'");
}

std::string CflSpec::describe() const {
    std::ostringstream os;
    os.precision(6);
    os << to_string(mode) << ": dt=" << dt << " dx=" << dx << " lambda=" << lambda << " lhs=" << lhs;
    if (mode == CflMode::limit) os << " multiplier_lhs=" << lhs_multiplier;
    if (mode == CflMode::eps_fixed) os << " Lambda=" << Lambda;
    os << (satisfied ? " (satisfied)" : " (violated)");
    return os.str();
}

namespace {

constexpr double kSlack = 1e-12;

void evaluate(CflSpec& s, const ModelConstants& c) {
    const double T = s.T;
    s.lambda = s.dt / s.dx;
    switch (s.mode) {
        case CflMode::eps_fixed:
            s.lhs = 2.0 * s.eps * s.dt / (s.dx * s.dx) + ch_constant(c.L0 + T * c.kappa) * s.lambda;
            s.satisfied = s.lhs <= s.Lambda * (1.0 + kSlack) && s.Lambda < 1.0;
            break;
        case CflMode::ap_limit:
            s.lhs = 2.0 * s.dt / (s.dx * s.dx) + ch_constant(c.L0 + T * c.K) * s.lambda;
            s.satisfied = s.lhs <= 1.0 + kSlack;
            break;
        case CflMode::limit: {
            const double script_ch = ch_constant(14.0 * (c.L0 + c.K * T) + 1.0);
            const double growth = c.L0 + T * c.K;
            s.lhs = script_ch * s.lambda;
            s.lhs_multiplier = s.lambda * std::sqrt(growth * growth + c.K);
            s.satisfied = s.lhs <= 1.0 + kSlack && s.lhs_multiplier <= 1.0 + kSlack;
            break;
        }
    }
}

void round_dt(CflSpec& s) {
    s.steps = static_cast<long>(std::ceil(s.T / s.dt - 1e-9));
    if (s.steps < 1) s.steps = 1;
    s.dt = s.T / static_cast<double>(s.steps);
}

bool positive(const std::optional<double>& v) { return v && *v > 0.0 && std::isfinite(*v); }

}  // namespace

CflSpec resolve_cfl(CflMode mode, double eps, const ModelConstants& c, double T,
                    const CflInputs& given) {
    if (!(T > 0.0)) throw DomainError("T must be positive");
    if (eps < 0.0 || eps > 1.0) throw DomainError("eps must lie in [0, 1]");
    for (const auto* v : {&given.dt, &given.dx, &given.lambda, &given.Lambda})
        if (v->has_value() && !positive(*v)) throw DomainError("CFL inputs must be positive");
    if (!given.dt && !given.dx) throw DomainError("CFL resolution needs dt or dx");

    CflSpec s;
    s.mode = mode;
    s.eps = eps;
    s.T = T;

    if (given.dt && given.dx) {
        s.dt = *given.dt;
        s.dx = *given.dx;
        s.Lambda = given.Lambda.value_or(0.0);
        round_dt(s);
        evaluate(s, c);
        if (mode == CflMode::eps_fixed && !given.Lambda) {
            // No target ratio: the pair itself defines Lambda.
            s.Lambda = s.lhs;
            s.satisfied = s.lhs < 1.0;
        }
        return s;
    }

    switch (mode) {
        case CflMode::eps_fixed: {
            if (!given.Lambda) throw DomainError("eps_fixed mode needs Lambda");
            const double Lam = *given.Lambda;
            if (Lam >= 1.0) throw DomainError("Lambda must lie in (0, 1)");
            s.Lambda = Lam;
            const double C = ch_constant(c.L0 + T * c.kappa);
            if (given.dx && given.lambda) {
                s.dx = *given.dx;
                s.dt = *given.lambda * s.dx;
            } else if (given.dx) {
                s.dx = *given.dx;
                s.dt = Lam / (2.0 * eps / (s.dx * s.dx) + C / s.dx);
            } else if (given.lambda) {
                s.dt = *given.dt;
                s.dx = s.dt / *given.lambda;
            } else {
                // Lambda dx^2 - C dt dx - 2 eps dt = 0
                s.dt = *given.dt;
                s.dx = (C * s.dt + std::sqrt(C * C * s.dt * s.dt + 8.0 * Lam * eps * s.dt)) / (2.0 * Lam);
            }
            break;
        }
        case CflMode::ap_limit: {
            const double C = ch_constant(c.L0 + T * c.K);
            if (given.lambda) {
                const double lam = *given.lambda;
                if (C * lam >= 1.0) throw DomainError("lambda too large for the ap_limit condition");
                if (given.dx) {
                    s.dx = *given.dx;
                } else {
                    s.dx = std::max(*given.dt / lam, 2.0 * lam / (1.0 - C * lam));
                }
                s.dt = lam * s.dx;
            } else if (given.dx) {
                s.dx = *given.dx;
                s.dt = 1.0 / (2.0 / (s.dx * s.dx) + C / s.dx);
            } else {
                s.dt = *given.dt;
                s.dx = 0.5 * (C * s.dt + std::sqrt(C * C * s.dt * s.dt + 8.0 * s.dt));
            }
            break;
        }
        case CflMode::limit: {
            const double script_ch = ch_constant(14.0 * (c.L0 + c.K * T) + 1.0);
            const double growth = c.L0 + T * c.K;
            const double lam_max = std::min(1.0 / script_ch, 1.0 / std::sqrt(growth * growth + c.K));
            const double lam = given.lambda ? *given.lambda : lam_max;
            if (given.dx) {
                s.dx = *given.dx;
                s.dt = lam * s.dx;
            } else {
                s.dt = *given.dt;
                s.dx = s.dt / lam;
            }
            break;
        }
    }
    round_dt(s);
    evaluate(s, c);
    return s;
}

double monotone_cfl_number(const State& u, double s, double eps) {
    const Grid& g = u.grid;
    const double L = grid_lipschitz(u);
    double inv2 = 1.0 / (g.dx * g.dx), inv1 = 1.0 / g.dx;
    if (g.dim == 2) {
        inv2 += 1.0 / (g.dy * g.dy);
        inv1 += 1.0 / g.dy;
    }
    return 2.0 * eps * s * inv2 + ch_constant(L) * s * inv1;
}

State monotone_step(const State& u, double s, double eps, MonotoneOptions opts) {
    const Grid& g = u.grid;
    if (u.values.size() != g.size()) throw DomainError("state size does not match its grid");
    if (!(s > 0.0)) throw DomainError("monotone step needs s > 0");
    if (eps < 0.0) throw DomainError("monotone step needs eps >= 0");
    if (g.nx() < 3 || (g.dim == 2 && g.ny() < 3))
        throw DomainError("monotone step needs at least 3 points per axis");
    if (!opts.unsafe) {
        const double cfl = monotone_cfl_number(u, s, eps);
        if (cfl > 1.0 + kSlack) {
            std::ostringstream os;
            os << "CFL violated in monotone step: 2 eps s/dx^2 + C_H(L) s/dx = " << cfl << " > 1";
            throw StabilityError(os.str());
        }
    }

    const Grid out_grid = g.shrunk();
    State out{out_grid, std::vector<double>(out_grid.size())};
    const std::size_t nx = g.nx();
    const double idx = 1.0 / g.dx, idx2 = idx * idx;
    const double* v = u.values.data();

    if (g.dim == 1) {
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double back = (v[i] - v[i - 1]) * idx;
            const double fwd = (v[i + 1] - v[i]) * idx;
            const double lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * idx2;
            out.values[i - 1] = v[i] + eps * s * lap - s * numerical_hamiltonian(back, fwd);
        }
        return out;
    }

    const std::size_t ny = g.ny();
    const double idy = 1.0 / g.dy, idy2 = idy * idy;
    const std::size_t onx = out_grid.nx();
    for (std::size_t iy = 1; iy + 1 < ny; ++iy) {
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const std::size_t k = iy * nx + ix;
            const double c = v[k];
            const double w = v[k - 1], e = v[k + 1], so = v[k - nx], no = v[k + nx];
            const double hx = numerical_hamiltonian((c - w) * idx, (e - c) * idx);
            const double hy = numerical_hamiltonian((c - so) * idy, (no - c) * idy);
            const double lap = (e - 2.0 * c + w) * idx2 + (no - 2.0 * c + so) * idy2;
            out.values[(iy - 1) * onx + (ix - 1)] = c + eps * s * lap - s * (hx + hy);
        }
    }
    return out;
}

}  // namespace apsolve
