#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "histodyn/commands.hpp"
#include "histodyn/identities.hpp"
#include "histodyn/model_file.hpp"

namespace py = pybind11;
using namespace histodyn;

namespace {

CommandOptions options(std::optional<double> dt, std::optional<int> steps, std::optional<double> tolerance,
                       std::optional<std::string> scheme, std::optional<std::uint64_t> seed) {
    CommandOptions o;
    o.dt = dt;
    o.steps = steps;
    o.tolerance = tolerance;
    o.scheme = scheme;
    o.seed = seed;
    return o;
}

}  // namespace

PYBIND11_MODULE(_histodyn, mod) {
    mod.doc() = "Hamiltonian histories of differential forms";

    static py::exception<ModelFileError> model_error(mod, "ModelFileError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ModelFileError& e) {
            py::object err = py::reinterpret_borrow<py::object>(model_error)(e.what());
            err.attr("line") = e.line;
            err.attr("column") = e.column;
            PyErr_SetObject(model_error.ptr(), err.ptr());
        }
    });

    py::class_<ModelSpec>(mod, "Model")
        .def_readonly("name", &ModelSpec::name)
        .def_property_readonly("n", &ModelSpec::n)
        .def_property_readonly("r", &ModelSpec::r)
        .def_property_readonly("dt", [](const ModelSpec& m) { return m.sim.dt; })
        .def_property_readonly("steps", [](const ModelSpec& m) { return m.sim.steps; })
        .def_property_readonly("cells", [](const ModelSpec& m) {
            std::vector<int> c;
            if (m.grid)
                for (int a = 1; a < m.grid->dim; ++a) c.push_back(m.grid->sizes[a]);
            return c;
        })
        .def("text", &print_model)
        .def("__repr__", [](const ModelSpec& m) {
            return "<Model " + m.name + " n=" + std::to_string(m.n()) + " r=" + std::to_string(m.r()) + ">";
        });

    mod.def("parse_model", &parse_model, py::arg("text"));
    mod.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));

    mod.def(
        "execute",
        [](const std::string& command, const ModelSpec& m, std::optional<double> dt, std::optional<int> steps,
           std::optional<double> tolerance, std::optional<std::string> scheme, std::optional<std::uint64_t> seed) {
            std::ostringstream out;
            CommandResult r;
            {
                py::gil_scoped_release nogil;
                r = execute(command, m, options(dt, steps, tolerance, scheme, seed), out);
            }
            return py::make_tuple(r.exit_code, out.str());
        },
        py::arg("command"), py::arg("model"), py::kw_only(), py::arg("dt") = py::none(), py::arg("steps") = py::none(),
        py::arg("tolerance") = py::none(), py::arg("scheme") = py::none(), py::arg("seed") = py::none());

    mod.def(
        "identity_suites",
        [](std::uint64_t seed, int samples, double tolerance) {
            py::list out;
            for (auto& s : run_identity_suites(seed, samples, tolerance)) {
                py::dict d;
                d["name"] = s.name;
                d["samples"] = s.samples;
                d["max_gap"] = s.max_gap;
                d["tolerance"] = s.tolerance;
                d["pass"] = s.pass();
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("samples") = 100, py::arg("tolerance") = 1e-12);

    py::enum_<ExitCode>(mod, "ExitCode")
        .value("ok", exit_ok)
        .value("checks_failed", exit_checks_failed)
        .value("usage", exit_usage)
        .value("model_file", exit_model_file)
        .value("derivation", exit_derivation)
        .value("simulation", exit_simulation)
        .value("cfl", exit_cfl)
        .value("non_finite", exit_non_finite)
        .value("io", exit_io)
        .value("diagnostics", exit_diagnostics)
        .value("internal", exit_internal);
}
