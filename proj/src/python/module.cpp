#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "apsolve/analysis.hpp"
#include "apsolve/cli.hpp"
#include "apsolve/config.hpp"
#include "apsolve/errors.hpp"
#include "apsolve/model.hpp"
#include "apsolve/stepper_eps.hpp"
#include "apsolve/stepper_limit.hpp"

namespace py = pybind11;
using namespace apsolve;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict state_dict(const State& s) {
    py::dict d;
    std::vector<double> x(s.grid.size()), y(s.grid.size());
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        const TraitPoint p = s.grid.point_at(k);
        x[k] = p[0];
        y[k] = p[1];
    }
    d["x"] = to_array(x);
    if (s.grid.dim == 2) {
        d["y"] = to_array(y);
        d["shape"] = py::make_tuple(s.grid.ny(), s.grid.nx());
    }
    d["values"] = to_array(s.values);
    return d;
}

py::dict trajectory_dict(const Trajectory& t, const char* scalar_name) {
    py::dict d;
    d["t"] = to_array(t.times);
    d[scalar_name] = to_array(t.scalar);
    std::vector<double> ax, ay;
    for (const auto& p : t.argmin) {
        ax.push_back(p[0]);
        ay.push_back(p[1]);
    }
    d["argmin_x"] = to_array(ax);
    if (t.initial_grid.dim == 2) d["argmin_y"] = to_array(ay);
    d["min"] = to_array(t.min_values);
    d["dt"] = t.dt;
    d["final"] = state_dict(t.final_state);
    py::list snaps;
    for (const auto& s : t.snapshots) {
        py::dict sd = state_dict(s.state);
        sd["t"] = s.t;
        snaps.append(sd);
    }
    d["snapshots"] = snaps;
    d["iterations"] = t.counters.iterations;
    return d;
}

RunOptions run_options(double T, double dt, double dx, const std::string& truncation,
                       const std::vector<double>& snapshots) {
    RunOptions r;
    r.T = T;
    r.dt = dt;
    r.dx = dx;
    r.dy = dx;
    r.truncation.kind = truncation_kind_from_string(truncation);
    r.snapshot_times = snapshots;
    return r;
}

// Model whose rate is a Python callable rate(x, I) on 1D points.
Model callable_model(const std::function<double(double, double)>& rate) {
    Model m = make_preset("analytic-1d");
    m.name = "python";
    m.growth_rate = [rate](const TraitPoint& x, double I) {
        py::gil_scoped_acquire gil;
        return rate(x[0], I);
    };
    m.growth_rate_dI = {};
    return m;
}

py::object as_python(const nlohmann::ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_apsolve, mod) {
    mod.doc() = "Asymptotic-preserving solvers for the Hopf-Cole selection-mutation model";

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
    py::register_exception<StabilityError>(mod, "StabilityError", PyExc_RuntimeError);
    py::register_exception<SolverFailure>(mod, "SolverFailure", PyExc_RuntimeError);
    py::register_exception<ModelError>(mod, "ModelError", PyExc_ArithmeticError);

    mod.def("presets", &preset_names);

    mod.def(
        "constants",
        [](const std::string& preset, double dx, double T) {
            const Model m = make_preset(preset);
            const ModelConstants c = estimate_constants(m, default_grid(m, dx, dx), T);
            py::dict d;
            d["L0"] = c.L0;
            d["K"] = c.K;
            d["kappa"] = c.kappa;
            d["I_m"] = c.I_m;
            d["I_M"] = c.I_M;
            return d;
        },
        py::arg("preset"), py::arg("dx") = 5e-2, py::arg("T") = 1.0);

    mod.def(
        "run_eps",
        [](const std::string& preset, double eps, double T, double dt, double dx, const std::string& truncation,
           const std::vector<double>& snapshots) {
            EpsRunConfig cfg;
            cfg.model = make_preset(preset);
            cfg.eps = eps;
            cfg.run = run_options(T, dt, dx, truncation, snapshots);
            Trajectory t;
            {
                py::gil_scoped_release release;
                t = run_eps(cfg);
            }
            return trajectory_dict(t, "I");
        },
        py::arg("preset"), py::arg("eps"), py::arg("T") = 1.0, py::arg("dt") = 5e-4, py::arg("dx") = 5e-2,
        py::arg("truncation") = "extrapolated", py::arg("snapshots") = std::vector<double>{});

    mod.def(
        "run_limit",
        [](const std::string& preset, double T, double dt, double dx, const std::string& truncation,
           const std::vector<double>& snapshots) {
            LimitRunConfig cfg;
            cfg.model = make_preset(preset);
            cfg.run = run_options(T, dt, dx, truncation, snapshots);
            Trajectory t;
            {
                py::gil_scoped_release release;
                t = run_limit(cfg);
            }
            py::dict d = trajectory_dict(t, "J");
            py::list jumps;
            for (const auto& j : detect_jumps(t.scalar, t.times)) jumps.append(py::make_tuple(j.t, j.size));
            d["jumps"] = jumps;
            return d;
        },
        py::arg("preset"), py::arg("T") = 1.0, py::arg("dt") = 5e-4, py::arg("dx") = 5e-2,
        py::arg("truncation") = "extrapolated", py::arg("snapshots") = std::vector<double>{});

    mod.def(
        "solve_I",
        [](const std::vector<double>& u, const std::vector<double>& x, const std::vector<double>& psi, double cell,
           double eps, double dt, const std::function<double(double, double)>& rate) {
            if (x.size() != u.size() || psi.size() != u.size()) throw DomainError("u, x and psi differ in length");
            std::vector<TraitPoint> pts;
            for (double xi : x) pts.push_back({xi, 0.0});
            return solve_I_implicit(u, pts, psi, cell, callable_model(rate), eps, dt).I;
        },
        py::arg("u"), py::arg("x"), py::arg("psi"), py::arg("cell"), py::arg("eps"), py::arg("dt"), py::arg("rate"));

    mod.def(
        "solve_J",
        [](const std::vector<double>& v, const std::vector<double>& x, double dt,
           const std::function<double(double, double)>& rate, std::array<double, 2> bracket) {
            if (x.size() != v.size()) throw DomainError("v and x differ in length");
            std::vector<TraitPoint> pts;
            for (double xi : x) pts.push_back({xi, 0.0});
            return solve_J_constraint(v, pts, callable_model(rate), dt, bracket).J;
        },
        py::arg("v"), py::arg("x"), py::arg("dt"), py::arg("rate"),
        py::arg("bracket") = std::array<double, 2>{0.0, 1.0});

    mod.def(
        "config_digest", [](const std::string& text) { return config_digest(parse_config(text)); },
        py::arg("config"));

    mod.def(
        "run_command",
        [](const std::string& command, const std::string& config, const std::string& out_dir, int threads) {
            RunConfig cfg = parse_config(config);
            cfg.out_dir = out_dir;
            RunManifest m;
            {
                py::gil_scoped_release release;
                m = dispatch(command, cfg, "python run_command " + command, threads);
            }
            return as_python(nlohmann::ordered_json::parse(m.to_json()));
        },
        py::arg("command"), py::arg("config"), py::arg("out_dir"), py::arg("threads") = 0);

    mod.attr("commands") = command_names();
}
