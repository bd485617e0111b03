#include "qtunnel/analysis.hpp"
#include "qtunnel/cli.hpp"
#include "qtunnel/error.hpp"
#include "qtunnel/model.hpp"
#include "qtunnel/propagator.hpp"
#include "qtunnel/qmc.hpp"
#include "qtunnel/spectra.hpp"
#include "qtunnel/wkb.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace qtunnel;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Thermally assisted tunneling: WKB instantons, worldline QMC and exact spectra";

    static py::exception<Error> error(m, "QtunnelError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            std::string code(to_string(e.code()));
            py::object inst = py::reinterpret_borrow<py::object>(error.ptr())(code + ": " + e.what());
            inst.attr("code") = code;
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    py::enum_<SpikeShape>(m, "SpikeShape")
        .value("GAUSSIAN", SpikeShape::Gaussian)
        .value("RECTANGULAR", SpikeShape::Rectangular)
        .value("TRIANGULAR", SpikeShape::Triangular);

    py::class_<SpikeSpec>(m, "SpikeSpec")
        .def(py::init<>())
        .def_readwrite("c", &SpikeSpec::c)
        .def_readwrite("d", &SpikeSpec::d)
        .def_readwrite("chi", &SpikeSpec::chi)
        .def_readwrite("delta", &SpikeSpec::delta)
        .def_readwrite("m_b", &SpikeSpec::m_b)
        .def_readwrite("shape", &SpikeSpec::shape)
        .def_readwrite("n_ref", &SpikeSpec::n_ref)
        .def("height", &SpikeSpec::height)
        .def("width", &SpikeSpec::width);

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<double, std::vector<double>, std::optional<SpikeSpec>>(), py::arg("gamma"), py::arg("g_poly"),
             py::arg("spike") = std::nullopt)
        .def_static("curie_weiss", &ModelSpec::curie_weiss, py::arg("gamma"), py::arg("h") = 0.0)
        .def_property_readonly("gamma", &ModelSpec::gamma)
        .def_property_readonly("g_poly", &ModelSpec::g_poly)
        .def("g", &ModelSpec::g)
        .def("dg", &ModelSpec::dg)
        .def("__repr__", [](const ModelSpec& s) {
            std::ostringstream o;
            o << "ModelSpec(gamma=" << s.gamma() << ", bias=" << s.bias() << ")";
            return o.str();
        });

    m.def("effective_potential", &effective_potential, py::arg("m"), py::arg("ell"), py::arg("model"));
    m.def("entropic_factor", &entropic_factor, py::arg("ell"));
    m.def("static_free_energy", &static_free_energy, py::arg("m"), py::arg("model"), py::arg("beta"));
    m.def("critical_ell", &critical_ell, py::arg("model"));
    m.def(
        "static_extrema",
        [](const ModelSpec& model, double beta) {
            auto e = static_extrema(model, beta);
            py::dict d;
            d["m0"] = e.m0;
            d["m1"] = e.m1;
            d["m2"] = e.m2;
            d["f0"] = e.f0;
            d["f1"] = e.f1;
            d["ell0"] = e.ell0;
            d["ell1"] = e.ell1;
            return d;
        },
        py::arg("model"), py::arg("beta"));

    m.def("multiplicity", &multiplicity, py::arg("n"), py::arg("two_s"));
    m.def(
        "sector_eigenvalues", [](int n, int two_s, const ModelSpec& model) { return sector_spectrum(n, two_s, model).eigenvalues; },
        py::arg("n"), py::arg("two_s"), py::arg("model"));
    m.def("equilibrium_mz_distribution", &equilibrium_mz_distribution, py::arg("n"), py::arg("model"), py::arg("beta"));
    m.def("free_energy_exact", &free_energy_exact, py::arg("n"), py::arg("model"), py::arg("beta"));

    m.def("action", &action, py::arg("e"), py::arg("ell"), py::arg("model"));
    m.def("period", &period, py::arg("e"), py::arg("ell"), py::arg("model"));
    m.def(
        "turning_points",
        [](double e, double ell, const ModelSpec& model) {
            auto t = turning_points(e, ell, model);
            return std::pair{t.a0, t.a1};
        },
        py::arg("e"), py::arg("ell"), py::arg("model"));

    py::class_<InstantonSolution>(m, "InstantonSolution")
        .def_readonly("beta", &InstantonSolution::beta)
        .def_readonly("ell", &InstantonSolution::ell)
        .def_readonly("energy", &InstantonSolution::energy)
        .def_readonly("a0", &InstantonSolution::a0)
        .def_readonly("a1", &InstantonSolution::a1)
        .def_readonly("action", &InstantonSolution::action)
        .def_readonly("period", &InstantonSolution::period)
        .def_readonly("script_i", &InstantonSolution::script_i)
        .def_readonly("alpha", &InstantonSolution::alpha)
        .def_readonly("frak_f", &InstantonSolution::frak_f)
        .def_readonly("frak_f0", &InstantonSolution::frak_f0)
        .def_property_readonly("regime", [](const InstantonSolution& s) { return std::string(to_string(s.regime)); })
        .def_property_readonly("trajectory", [](const InstantonSolution& s) {
            std::vector<std::tuple<double, double, double, double>> out;
            out.reserve(s.trajectory.size());
            for (const auto& p : s.trajectory) out.emplace_back(p.tau, p.m_z, p.m_x, p.nu);
            return out;
        });

    m.def(
        "solve_instanton",
        [](const ModelSpec& model, double beta, bool allow_static_fallback) {
            InstantonOptions o;
            o.allow_static_fallback = allow_static_fallback;
            return solve_instanton(model, beta, o);
        },
        py::arg("model"), py::arg("beta"), py::arg("allow_static_fallback") = true);
    m.def(
        "wkb_alpha", [](const ModelSpec& model, double beta) { return wkb_alpha(model, beta).alpha; }, py::arg("model"), py::arg("beta"));

    m.def(
        "evolve_trace",
        [](const std::vector<double>& lambda, double gamma, double beta) {
            auto k = evolve(lambda, gamma, beta);
            return std::pair{k.trace, ell_estimate(k)};
        },
        py::arg("lambda_samples"), py::arg("gamma"), py::arg("beta"));
    m.def(
        "delta_f", [](const ModelSpec& model, double beta) { return delta_F(model, beta).beta_delta; }, py::arg("model"),
        py::arg("beta"));
    m.def(
        "verify_identities",
        [](const ModelSpec& model, double beta) {
            std::vector<std::tuple<std::string, double, double>> out;
            for (const auto& l : verify_identities(model, beta)) out.emplace_back(l.name, l.residual, l.threshold);
            return out;
        },
        py::arg("model"), py::arg("beta"));

    py::class_<EscapeRecord>(m, "EscapeRecord")
        .def(py::init([](int n, double beta, double gamma, double h, std::uint64_t seed, double sweeps, bool escaped) {
                 return EscapeRecord{n, beta, gamma, h, seed, sweeps, escaped};
             }),
             py::arg("n"), py::arg("beta"), py::arg("gamma"), py::arg("h"), py::arg("seed"), py::arg("sweeps"),
             py::arg("escaped") = true)
        .def_readonly("n_spins", &EscapeRecord::n_spins)
        .def_readonly("seed", &EscapeRecord::seed)
        .def_readonly("sweeps", &EscapeRecord::sweeps)
        .def_readonly("escaped", &EscapeRecord::escaped);

    m.def(
        "escape_run",
        [](int n, const ModelSpec& model, double beta, std::uint64_t seed, std::uint64_t max_sweeps, double reversal_fraction) {
            EscapeOptions o;
            o.max_sweeps = max_sweeps;
            o.reversal_fraction = reversal_fraction;
            py::gil_scoped_release release;
            return escape_run(n, model, beta, seed, o);
        },
        py::arg("n"), py::arg("model"), py::arg("beta"), py::arg("seed"), py::arg("max_sweeps") = 100000000ULL,
        py::arg("reversal_fraction") = 0.25);
    m.def(
        "equilibrium_sample",
        [](int n, const ModelSpec& model, double beta, std::uint64_t seed, std::uint64_t n_samples, std::uint64_t thin) {
            EquilibriumOptions o;
            o.n_samples = n_samples;
            o.thin = thin;
            auto rng = make_rng(seed);
            py::gil_scoped_release release;
            return equilibrium_sample(n, model, beta, rng, o);
        },
        py::arg("n"), py::arg("model"), py::arg("beta"), py::arg("seed") = 1, py::arg("n_samples") = 100000,
        py::arg("thin") = 1);
    m.def("total_variation", &total_variation);

    m.def(
        "fit_alpha",
        [](const std::vector<EscapeRecord>& records, int n_min, int n_max, int bootstrap, int min_runs) {
            FitOptions o;
            o.n_min = n_min;
            o.n_max = n_max;
            o.bootstrap = bootstrap;
            o.min_runs = min_runs;
            auto f = fit_alpha(records, o);
            py::dict d;
            d["alpha"] = f.alpha;
            d["stderr"] = f.std_error;
            d["intercept"] = f.intercept;
            d["n_values"] = f.n_values;
            d["n_runs_per_n"] = f.n_runs_per_n;
            d["residuals"] = f.residuals;
            return d;
        },
        py::arg("records"), py::arg("n_min") = 12, py::arg("n_max") = 16, py::arg("bootstrap") = 1000, py::arg("min_runs") = 50);

    m.def(
        "spike_report",
        [](const SpikeSpec& spike, const std::vector<double>& g0_poly, const std::vector<int>& n_list) {
            auto r = spike_report(spike, g0_poly, n_list);
            py::dict d;
            d["gamma_c"] = r.gamma_c;
            d["gamma_factor"] = r.gamma_factor;
            d["mu_est"] = r.mu_est;
            d["kappa"] = r.kappa;
            d["scaling_exponent"] = r.scaling_exponent;
            d["classical_exponent"] = r.classical_exponent;
            d["regime"] = std::string(to_string(r.regime));
            d["action"] = r.action;
            d["t_c_estimate"] = r.t_c_estimate;
            return d;
        },
        py::arg("spike"), py::arg("g0_poly") = std::vector<double>{0.0, 1.0},
        py::arg("n_list") = std::vector<int>{64, 128, 256, 512});

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return std::tuple{code, out.str(), err.str()};
        },
        py::arg("args"));
}
