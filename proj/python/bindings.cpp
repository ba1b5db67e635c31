#include "capaf/capfun.hpp"
#include "capaf/error.hpp"
#include "capaf/mixedvol.hpp"
#include "capaf/reconstruct.hpp"
#include "capaf/runner.hpp"
#include "capaf/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace capaf;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::handle& obj)
{
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<double> span_to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

RunConfig config_from(const py::dict& d)
{
    const nlohmann::json j = from_python(d);
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    if (j.contains("theta")) {
        c.theta = j["theta"].get<double>();
    }
    if (j.contains("grid")) {
        c.n_rho = j["grid"].at(0).get<int>();
        c.n_phi = j["grid"].at(1).get<int>();
    }
    c.radial_order = j.value("radial_order", c.radial_order);
    c.seed = j.value("seed", c.seed);
    c.trials = j.value("trials", c.trials);
    c.equality_trials = j.value("equality_trials", c.equality_trials);
    c.count = j.value("count", c.count);
    c.amplitude = j.value("amplitude", c.amplitude);
    c.base_radius = j.value("base_radius", c.base_radius);
    c.radius = j.value("radius", c.radius);
    c.f2 = j.value("f2", c.f2);
    c.method = j.value("method", c.method);
    c.sweep = j.value("sweep", c.sweep);
    c.t_samples = j.value("t_samples", c.t_samples);
    c.inputs = j.value("inputs", c.inputs);
    c.tolerance_profile = j.value("tolerance_profile", c.tolerance_profile);
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Capillary convex bodies on a spherical-cap grid";

    // message starts with the error code, e.g. "invalid-angle: ..."
    py::register_exception<Error>(m, "CapafError");

    py::class_<CapGrid>(m, "CapGrid")
        .def_property_readonly("theta", &CapGrid::theta)
        .def_property_readonly("n_rho", &CapGrid::n_rho)
        .def_property_readonly("n_phi", &CapGrid::n_phi)
        .def_property_readonly("radial_order", &CapGrid::radial_order)
        .def_property_readonly("d_rho", &CapGrid::d_rho)
        .def_property_readonly("node_count", &CapGrid::node_count)
        .def_property_readonly("rho_nodes", [](const CapGrid& g) { return span_to_vector(g.rho_nodes()); })
        .def_property_readonly("phi_nodes", [](const CapGrid& g) { return span_to_vector(g.phi_nodes()); })
        .def("__repr__", [](const CapGrid& g) {
            return "CapGrid(theta=" + std::to_string(g.theta()) + ", n_rho=" + std::to_string(g.n_rho()) +
                   ", n_phi=" + std::to_string(g.n_phi()) + ")";
        });

    m.def("build_grid", &build_grid, py::arg("theta"), py::arg("n_rho"), py::arg("n_phi"),
          py::arg("radial_order") = kDefaultRadialOrder);

    py::class_<CapillaryBody>(m, "CapillaryBody")
        .def_property_readonly("grid", &CapillaryBody::grid)
        .def_property_readonly("values", [](const CapillaryBody& b) { return Eigen::VectorXd(b.values()); })
        .def_property_readonly("theta", &CapillaryBody::theta)
        .def_readonly("min_eig", &CapillaryBody::min_eig)
        .def("to_json", [](const CapillaryBody& b) { return to_python(body_to_json(b)); });

    m.def("ell", &ell, py::arg("grid"));
    m.def("ell_values", [](const CapGrid& g) { return Eigen::VectorXd(ell_values(g)); }, py::arg("grid"));
    m.def(
        "random_body",
        [](const CapGrid& g, std::uint64_t seed, double base_radius, double amplitude) {
            return random_body(g, {.seed = seed, .base_radius = base_radius, .amplitude = amplitude});
        },
        py::arg("grid"), py::arg("seed"), py::arg("base_radius") = 1.0, py::arg("amplitude") = 0.6);
    m.def(
        "random_capillary",
        [](const CapGrid& g, std::uint64_t seed) { return Eigen::VectorXd(random_capillary(g, seed).values); },
        py::arg("grid"), py::arg("seed"));
    m.def(
        "horizontal_linear",
        [](const CapGrid& g, double dx, double dy) { return Eigen::VectorXd(horizontal_linear(g, dx, dy).values); },
        py::arg("grid"), py::arg("dx"), py::arg("dy"));
    m.def(
        "certify", [](const CapGrid& g, const Eigen::VectorXd& h) { return certify(g, h).accepted; }, py::arg("grid"),
        py::arg("h"));
    m.def(
        "body_from_values",
        [](const CapGrid& g, const Eigen::VectorXd& h) {
            Certification c = certify(g, h);
            if (!c.accepted) {
                throw Error(ErrorCode::NotConvex, "values do not certify as a capillary convex body");
            }
            return *c.body;
        },
        py::arg("grid"), py::arg("h"));
    m.def("load_body", [](const std::string& path) { return load_body(path); }, py::arg("path"));
    m.def("save_body", &save_body, py::arg("body"), py::arg("path"));

    m.def(
        "mixed_volume",
        [](const CapGrid& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
            return mixed_volume(g, a, b, c);
        },
        py::arg("grid"), py::arg("f1"), py::arg("f2"), py::arg("f3"));
    m.def("cap_volume", &cap_volume, py::arg("theta"));
    m.def(
        "quermassintegral", [](const CapillaryBody& b, int j) { return quermassintegral(b, j); }, py::arg("body"),
        py::arg("j"));
    m.def(
        "quermass_report",
        [](const CapillaryBody& b, double r) { return to_python(to_json(quermass_report(b, r))); }, py::arg("body"),
        py::arg("reference_radius") = 0.0);

    m.def(
        "af_check",
        [](const CapillaryBody& f2, const Eigen::VectorXd& f, const Eigen::VectorXd& f1) {
            return to_python(to_json(af_check(make_space(f2), f, f1)));
        },
        py::arg("f2"), py::arg("f"), py::arg("f1"));
    m.def(
        "spectrum",
        [](const CapillaryBody& f2, const std::string& method, int how_many) {
            return to_python(to_json(spectrum(make_space(f2), {.how_many = how_many, .method = method})));
        },
        py::arg("f2"), py::arg("method") = "auto", py::arg("how_many") = 8);
    m.def(
        "quermass_chain", [](const CapillaryBody& b) { return to_python(to_json(quermass_chain(b))); },
        py::arg("body"));

    m.def(
        "patch_summary", [](const CapillaryBody& b) { return to_python(patch_summary(b, embed(b))); },
        py::arg("body"));
    m.def(
        "embed",
        [](const CapillaryBody& b) {
            const EmbeddedPatch p = embed(b);
            return py::make_tuple(Eigen::MatrixXd(p.positions), Eigen::MatrixXd(p.normals), p.triangles);
        },
        py::arg("body"), "positions, normals and triangles of the capillary surface");

    m.def(
        "run",
        [](const py::dict& config) {
            const RunConfig c = config_from(config);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(c);
            }
            py::dict out;
            out["name"] = r.name;
            out["passed"] = r.passed;
            out["report"] = to_python(r.report);
            out["csv"] = r.csv;
            py::dict artifacts;
            for (const Artifact& a : r.artifacts) {
                artifacts[py::str(a.file)] = a.contents;
            }
            out["artifacts"] = artifacts;
            return out;
        },
        py::arg("config"),
        "Run a batch command. Keys mirror the CLI flags: command, theta, grid=(n_rho, n_phi), seed, trials, ...");
}
