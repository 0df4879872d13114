#include "diva/errors.hpp"
#include "diva/functional.hpp"
#include "diva/model.hpp"
#include "diva/oracle.hpp"
#include "diva/rdm.hpp"
#include "diva/soft.hpp"
#include "diva/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace diva;

namespace {

FunctionalSpec make_spec(const std::string& functional, double fd_step, bool analytic) {
  return FunctionalSpec{parse_functional_kind(functional), fd_step, analytic};
}

py::dict report_dict(const EnergyReport& r) {
  py::dict d;
  d["total"] = r.total;
  d["one_body"] = r.one_body;
  d["interaction"] = r.interaction;
  d["core"] = r.core;
  d["double_occupation"] = r.double_occupation;
  d["mu"] = r.mu;
  return d;
}

py::list trace_list(const DivaTrace& t) {
  py::list out;
  for (const auto& r : t.records) {
    py::dict d;
    d["iter"] = r.iter;
    d["energy"] = r.energy;
    d["delta_energy"] = r.delta_energy;
    d["delta_rdm"] = r.delta_rdm;
    d["mu"] = r.mu;
    d["n_boundary_members"] = r.n_boundary_members;
    d["weights"] = r.weights;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_diva, m) {
  m.doc() = "Interpolation-based 1-RDM functional minimization for Hubbard chains and small molecules";

  auto base = py::register_exception<Error>(m, "DivaError", PyExc_RuntimeError);
  py::register_exception<NotRepresentable>(m, "NotRepresentable", base.ptr());
  py::register_exception<NotSymmetric>(m, "NotSymmetric", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<WeightError>(m, "WeightError", base.ptr());
  py::register_exception<FillingError>(m, "FillingError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<NotUniform>(m, "NotUniform", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<HeaderError>(m, "HeaderError", base.ptr());

  py::enum_<DivaMode>(m, "DivaMode").value("mono", DivaMode::Mono).value("multi", DivaMode::Multi);
  py::enum_<DirectionKind>(m, "DirectionKind")
      .value("sd", DirectionKind::SteepestDescent)
      .value("cg", DirectionKind::ConjugateGradient);
  py::enum_<DiagonalMode>(m, "DiagonalMode")
      .value("conserve_n", DiagonalMode::ConserveN)
      .value("fix_diagonal", DiagonalMode::FixDiagonal);

  py::class_<DensityMatrix>(m, "DensityMatrix")
      .def(py::init([](const Matrix& up, const Matrix& down) { return DensityMatrix(up, down); }), py::arg("up"),
           py::arg("down"))
      .def_static("closed_shell", &DensityMatrix::closed_shell, py::arg("block"))
      .def_property_readonly("n_spatial", &DensityMatrix::n_spatial)
      .def_property_readonly("up", [](const DensityMatrix& g) { return g.block(0); })
      .def_property_readonly("down", [](const DensityMatrix& g) { return g.block(1); })
      .def_property_readonly("spin_symmetric", &DensityMatrix::spin_symmetric)
      .def("trace", &DensityMatrix::trace, py::arg("spin"))
      .def("occupations", [](const DensityMatrix& g, int spin) { return g.spectrum(spin).occupations; },
           py::arg("spin"))
      .def("natural_orbitals", [](const DensityMatrix& g, int spin) { return g.spectrum(spin).orbitals; },
           py::arg("spin"));

  m.def(
      "classify",
      [](const DensityMatrix& g, double tol_boundary, double tol_integer) {
        const DomainClass c = classify(g, tol_boundary, tol_integer);
        return py::make_tuple(std::string(to_string(c.tag)), c.pseudo_distance);
      },
      py::arg("gamma"), py::arg("tol_boundary") = kDefaultTolBoundary, py::arg("tol_integer") = kDefaultTolInteger,
      "Returns (class name, pseudo-distance).");
  m.def("pseudo_distance", py::overload_cast<const DensityMatrix&>(&pseudo_distance), py::arg("gamma"));
  m.def(
      "convex_combine",
      [](const std::vector<DensityMatrix>& members, const std::vector<double>& weights) {
        return convex_combine(members, weights);
      },
      py::arg("members"), py::arg("weights"));
  m.def(
      "idempotent_decompose",
      [](const DensityMatrix& g, double tol_integer) {
        ConvexDecomposition d = idempotent_decompose(g, tol_integer);
        return py::make_tuple(d.weights, d.members);
      },
      py::arg("gamma"), py::arg("tol_integer") = kDefaultTolInteger, "Returns (weights, idempotent members).");
  m.def("fractional_count", &fractional_count, py::arg("gamma"), py::arg("tol_integer") = kDefaultTolInteger);
  m.def("frobenius_distance", &frobenius_distance, py::arg("a"), py::arg("b"));

  py::class_<LatticeSpec>(m, "LatticeSpec")
      .def(py::init([](int n_sites, double hopping, double coulomb, bool periodic, double filling) {
             return LatticeSpec{n_sites, hopping, coulomb, periodic, filling};
           }),
           py::arg("n_sites"), py::arg("hopping") = 1.0, py::arg("coulomb") = 0.0, py::arg("periodic") = true,
           py::arg("filling") = 1.0)
      .def_readwrite("n_sites", &LatticeSpec::n_sites)
      .def_readwrite("hopping", &LatticeSpec::hopping)
      .def_readwrite("coulomb", &LatticeSpec::coulomb)
      .def_readwrite("periodic", &LatticeSpec::periodic)
      .def_readwrite("filling", &LatticeSpec::filling);

  py::class_<ManyBodyModel>(m, "ManyBodyModel")
      .def_readonly("n_spatial", &ManyBodyModel::n_spatial)
      .def_readonly("one_body", &ManyBodyModel::one_body)
      .def_readonly("n_electrons", &ManyBodyModel::n_electrons)
      .def_readonly("core_energy", &ManyBodyModel::core_energy)
      .def_property_readonly("local", &ManyBodyModel::local)
      .def_property_readonly("hubbard_u", &ManyBodyModel::hubbard_u);

  m.def("build_hubbard", &build_hubbard, py::arg("lattice"));
  m.def("with_coulomb", &with_coulomb, py::arg("model"), py::arg("u"));
  m.def("load_fcidump", &load_fcidump, py::arg("path"));
  m.def(
      "bloch_occupations",
      [](const DensityMatrix& g, const LatticeSpec& ls) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : bloch_occupations(g, ls)) out.emplace_back(p.k, p.eta[0], p.eta[1]);
        return out;
      },
      py::arg("gamma"), py::arg("lattice"), "Returns [(k, eta_up, eta_down)].");

  m.def(
      "evaluate",
      [](const DensityMatrix& g, const ManyBodyModel& model, const std::string& functional) {
        return report_dict(evaluate(g, model, make_spec(functional, 1e-5, true)));
      },
      py::arg("gamma"), py::arg("model"), py::arg("functional") = "mueller");
  m.def(
      "gradient",
      [](const DensityMatrix& g, const ManyBodyModel& model, const std::string& functional, double fd_step,
         bool analytic) { return gradient(g, model, make_spec(functional, fd_step, analytic)); },
      py::arg("gamma"), py::arg("model"), py::arg("functional") = "mueller", py::arg("fd_step") = 1e-5,
      py::arg("analytic") = true, "Returns [grad_up, grad_down].");
  m.def("initial_guess", &initial_guess, py::arg("model"));

  py::class_<DivaConfig>(m, "DivaConfig")
      .def(py::init<>())
      .def_readwrite("mode", &DivaConfig::mode)
      .def_readwrite("energy_tol", &DivaConfig::energy_tol)
      .def_readwrite("rdm_tol", &DivaConfig::rdm_tol)
      .def_readwrite("max_iters", &DivaConfig::max_iters)
      .def_readwrite("theta_growth", &DivaConfig::theta_growth)
      .def_readwrite("bracket_tol", &DivaConfig::bracket_tol)
      .def_readwrite("direction", &DivaConfig::direction)
      .def_readwrite("diagonal_mode", &DivaConfig::diagonal_mode);

  py::class_<DivaResult>(m, "DivaResult")
      .def_readonly("gamma", &DivaResult::gamma)
      .def_property_readonly("energy", [](const DivaResult& r) { return report_dict(r.report); })
      .def_property_readonly("trace", [](const DivaResult& r) { return trace_list(r.trace); })
      .def_readonly("converged", &DivaResult::converged)
      .def_readonly("iterations", &DivaResult::iterations)
      .def_readonly("status", &DivaResult::status)
      .def_readonly("diagonal_spread", &DivaResult::diagonal_spread);

  m.def(
      "diva_run",
      [](const ManyBodyModel& model, const std::string& functional, const DivaConfig& cfg,
         const std::optional<DensityMatrix>& start, double fd_step) {
        py::gil_scoped_release release;
        return diva_run(model, make_spec(functional, fd_step, true), cfg, start);
      },
      py::arg("model"), py::arg("functional") = "mueller", py::arg("config") = DivaConfig{},
      py::arg("start") = std::nullopt, py::arg("fd_step") = 1e-5);

  py::class_<SoftConfig>(m, "SoftConfig")
      .def(py::init([](int max_outer, double mixing, int anderson_depth) {
             return SoftConfig{max_outer, mixing, anderson_depth};
           }),
           py::arg("max_outer") = 100, py::arg("mixing") = 1.0, py::arg("anderson_depth") = 0)
      .def_readwrite("max_outer", &SoftConfig::max_outer)
      .def_readwrite("mixing", &SoftConfig::mixing)
      .def_readwrite("anderson_depth", &SoftConfig::anderson_depth);

  py::class_<SoftResult>(m, "SoftResult")
      .def_readonly("gamma", &SoftResult::gamma)
      .def_property_readonly("energy", [](const SoftResult& r) { return report_dict(r.report); })
      .def_property_readonly("v_hxc", [](const SoftResult& r) { return r.state.v_hxc; })
      .def_property_readonly("mu_pks", [](const SoftResult& r) { return r.state.mu_pks; })
      .def_property_readonly("outer_iterations", [](const SoftResult& r) { return r.trace.size(); })
      .def_readonly("converged", &SoftResult::converged)
      .def_readonly("status", &SoftResult::status);

  m.def(
      "soft_diva_run",
      [](const ManyBodyModel& model, const std::string& functional, const DivaConfig& cfg,
         const std::optional<Vector>& v_init, const SoftConfig& soft, double fd_step) {
        const Vector v = v_init ? *v_init : Vector::Zero(model.n_spatial);
        py::gil_scoped_release release;
        return soft_diva_run(model, make_spec(functional, fd_step, true), cfg, v, soft);
      },
      py::arg("model"), py::arg("functional") = "tp", py::arg("config") = DivaConfig{},
      py::arg("v_init") = std::nullopt, py::arg("soft") = SoftConfig{}, py::arg("fd_step") = 1e-5);

  py::class_<VxcRow>(m, "VxcRow")
      .def_readonly("n", &VxcRow::n)
      .def_readonly("u", &VxcRow::u)
      .def_readonly("v_xc", &VxcRow::v_xc)
      .def_readonly("gauge_shift", &VxcRow::gauge_shift)
      .def_readonly("v_hxc_mean", &VxcRow::v_hxc_mean)
      .def_readonly("mu_pks", &VxcRow::mu_pks)
      .def_readonly("converged", &VxcRow::converged)
      .def_readonly("error", &VxcRow::error);

  m.def(
      "vxc_extract",
      [](const LatticeSpec& lattice, const std::vector<double>& fillings, const std::string& functional,
         const DivaConfig& cfg, const SoftConfig& soft, int jobs) {
        py::gil_scoped_release release;
        return vxc_extract(make_spec(functional, 1e-5, true), cfg, lattice, fillings, soft, jobs);
      },
      py::arg("lattice"), py::arg("fillings"), py::arg("functional") = "tp", py::arg("config") = DivaConfig{},
      py::arg("soft") = SoftConfig{}, py::arg("jobs") = 1);

  py::class_<FciResult>(m, "FciResult")
      .def_readonly("energy", &FciResult::energy)
      .def_readonly("one_rdm", &FciResult::one_rdm)
      .def_readonly("double_occ", &FciResult::double_occ)
      .def_readonly("dimension", &FciResult::dimension);

  m.def(
      "fci_ground_state",
      [](const ManyBodyModel& model, unsigned seed) {
        py::gil_scoped_release release;
        return fci_ground_state(model, seed);
      },
      py::arg("model"), py::arg("seed") = 12345u);
  m.def("fci_dimension", &fci_dimension, py::arg("model"));
  m.def("tight_binding_energy", &tight_binding_energy, py::arg("lattice"));
  m.def("lieb_wu_half_filling", &lieb_wu_half_filling, py::arg("u_over_t"));
}
