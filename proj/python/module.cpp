#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "afem/cli.hpp"
#include "afem/history.hpp"
#include "afem/parallel.hpp"

namespace py = pybind11;
using namespace afem;

namespace {

Box make_box(const Vec3& lo, const Vec3& hi) { return Box{lo, hi}; }

py::dict record_dict(const IterationRecord& r) {
  py::dict d;
  d["iter"] = r.iteration;
  d["ndofs"] = r.n_dofs;
  d["nelems"] = r.n_elements;
  d["energy"] = r.energy;
  d["lambda"] = r.lambda;
  d["eta_global"] = r.global_eta;
  d["eta_max"] = r.max_eta;
  d["osc_global"] = r.global_osc;
  d["eq34_defect"] = r.eq34_defect;
  d["hmax_marked"] = r.h_max_marked;
  d["wall_s"] = r.wall_time;
  d["n_marked"] = r.n_marked;
  d["scf_iterations"] = r.scf_iterations;
  return d;
}

py::dict history_dict(const ConvergenceHistory& h) {
  py::dict d;
  py::list records;
  for (const auto& r : h.records) records.append(record_dict(r));
  d["records"] = records;
  d["failed"] = h.failed;
  d["failure"] = h.failure;
  d["stop_reason"] = h.stop_reason;
  d["warnings"] = h.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_afem, m) {
  m.doc() = "Adaptive finite elements for constrained nonlinear eigenvalue problems";
  m.attr("__version__") = "0.1.0";
  m.attr("HISTORY_HEADER") = kHistoryHeader;

  // translators run in reverse registration order: the derived type goes last
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("set_num_threads", &set_num_threads, py::arg("n"));

  py::class_<Mesh>(m, "Mesh")
      .def_static(
          "box", [](const Vec3& lo, const Vec3& hi, std::array<int, 3> n) { return Mesh::box(make_box(lo, hi), n); },
          py::arg("lo"), py::arg("hi"), py::arg("divisions"))
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_elements", &Mesh::n_elements)
      .def_property_readonly("n_faces", &Mesh::n_faces)
      .def_property_readonly("vertices", &Mesh::vertices)
      .def("element_vertices",
           [](const Mesh& mesh, ElementId t) {
             if (t < 0 || static_cast<std::size_t>(t) >= mesh.n_elements()) throw py::index_error();
             return mesh.elements()[t].vertices;
           })
      .def(
          "bisect",
          [](const Mesh& mesh, const std::vector<ElementId>& marked, int bisections) {
            return mesh.bisect(marked, BisectOptions{bisections, 64});
          },
          py::arg("marked"), py::arg("bisections") = 1)
      .def("is_conforming", &Mesh::is_conforming)
      .def("max_shape_ratio", [](const Mesh& mesh) { return mesh.quality().max_shape_ratio; })
      .def("h_max", [](const Mesh& mesh) { return mesh.quality().h_max; });

  py::class_<ProblemModel>(m, "ProblemModel")
      .def_readonly("name", &ProblemModel::name)
      .def_readonly("alpha", &ProblemModel::alpha)
      .def_readonly("Z", &ProblemModel::Z)
      .def("is_linear", &ProblemModel::is_linear)
      .def("potential", [](const ProblemModel& model, const Vec3& x) { return model.potential(x); });

  m.def(
      "gpe_model", [](double beta, const Vec3& gamma, const Vec3& lo, const Vec3& hi) {
        return make_gpe_model(beta, gamma, make_box(lo, hi));
      },
      py::arg("beta") = 200.0, py::arg("gamma") = Vec3{1.0, 2.0, 4.0}, py::arg("lo") = Vec3{-8.0, -6.0, -4.0},
      py::arg("hi") = Vec3{8.0, 6.0, 4.0});
  m.def(
      "tfw_helium_model",
      [](const Vec3& lo, const Vec3& hi, const std::string& hartree) {
        ProblemModel model = make_tfw_helium_model(make_box(lo, hi));
        model.nonlocal.strategy = parse_hartree_strategy(hartree);
        return model;
      },
      py::arg("lo") = Vec3{-5.0, -5.0, -5.0}, py::arg("hi") = Vec3{5.0, 5.0, 5.0}, py::arg("hartree") = "poisson");
  m.def(
      "linear_model",
      [](double alpha, double Z, const Vec3& lo, const Vec3& hi) {
        return make_linear_model(alpha, Z, nullptr, make_box(lo, hi));
      },
      py::arg("alpha") = 0.5, py::arg("Z") = 1.0, py::arg("lo") = Vec3{0.0, 0.0, 0.0},
      py::arg("hi") = Vec3{1.0, 1.0, 1.0});

  m.def(
      "mark",
      [](const std::vector<double>& eta_sq, const std::string& kind, double parameter) {
        const MarkResult r = mark(eta_sq, MarkStrategy{parse_mark_kind(kind), parameter});
        return py::make_tuple(r.elements, r.converged);
      },
      py::arg("eta_sq"), py::arg("kind") = "maximum", py::arg("parameter") = 0.5,
      "Marked element ids (ascending) and the all-zero flag.");

  m.def(
      "afem_run",
      [](const ProblemModel& model, std::array<int, 3> divisions, int degree, const std::string& strategy,
         double parameter, std::optional<std::size_t> max_dofs, std::optional<double> eta_tol,
         std::optional<int> max_iters) {
        AdaptOptions o;
        o.initial_divisions = divisions;
        o.degree = degree;
        o.strategy = {parse_mark_kind(strategy), parameter};
        o.stop.max_dofs = max_dofs;
        o.stop.eta_tol = eta_tol;
        o.stop.max_iters = max_iters;
        ConvergenceHistory h;
        {
          py::gil_scoped_release release;
          h = afem_run(model, o);
        }
        return history_dict(h);
      },
      py::arg("model"), py::arg("divisions") = std::array<int, 3>{4, 4, 4}, py::arg("degree") = 1,
      py::arg("strategy") = "maximum", py::arg("parameter") = 0.5, py::arg("max_dofs") = py::none(),
      py::arg("eta_tol") = py::none(), py::arg("max_iters") = py::none());

  m.def(
      "parse_config", [](const std::string& text) { return dump_config(parse_config(text)); }, py::arg("text"),
      "Validates a JSON config and returns its normalised form.");
  m.def(
      "run_config",
      [](const std::string& path, std::optional<std::string> output_dir, std::optional<int> vtk_every) {
        AdaptConfig c = load_config(path);
        if (output_dir) c.output.dir = *output_dir;
        if (vtk_every) c.output.vtk_every = *vtk_every;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c);
        }
        py::dict d = history_dict(r.history);
        d["exit_code"] = r.exit_code;
        d["history_path"] = r.history_path;
        d["vtk_files"] = r.vtk_files;
        return d;
      },
      py::arg("path"), py::arg("output_dir") = py::none(), py::arg("vtk_every") = py::none());

  m.def("validate", []() {
    ValidationReport report;
    {
      py::gil_scoped_release release;
      report = validate_oracles();
    }
    py::list out;
    for (const auto& c : report.checks) out.append(py::make_tuple(c.name, c.passed, c.detail));
    return out;
  });

  m.def("eval_vxc", &eval_vxc, py::arg("rho"));
  m.def("thomas_fermi_constant", &thomas_fermi_constant);
}
