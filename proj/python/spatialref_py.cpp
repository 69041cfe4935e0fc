#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spatialref/errors.hpp"
#include "spatialref/harness.hpp"
#include "spatialref/stability.hpp"

namespace py = pybind11;
using namespace spatialref;

namespace
{

// Dicts cross the boundary as JSON text.
nlohmann::json from_py(const py::object & o)
{
  if(o.is_none()) return nlohmann::json::object();
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_py(const nlohmann::json & j)
{
  return py::module_::import("json").attr("loads")(j.dump());
}

py::tuple point(const Point2 & p)
{
  return py::make_tuple(p.x(), p.y());
}

} // namespace

PYBIND11_MODULE(_spatialref, m)
{
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FingerprintMismatch>(m, "FingerprintMismatch", PyExc_ValueError);
  py::register_exception<UnsupportedLift>(m, "UnsupportedLift", PyExc_ArithmeticError);
  py::register_exception<ContactLoss>(m, "ContactLoss", PyExc_ArithmeticError);

  py::class_<RobotModel>(m, "Model")
      .def_property_readonly("dof", &RobotModel::dof)
      .def_property_readonly("total_mass", &RobotModel::total_mass)
      .def_property_readonly("fingerprint", &RobotModel::fingerprint)
      .def_property_readonly("default_config", [](const RobotModel & r) { return Eigen::VectorXd(r.default_config()); })
      .def_property_readonly("foot_extent",
                             [](const RobotModel & r) { return py::make_tuple(r.foot_extent().lower, r.foot_extent().upper); })
      .def("forward_kinematics",
           [](const RobotModel & r, const Eigen::VectorXd & q) {
             py::list out;
             for(const auto & p : forward_kinematics(r, q)) out.append(point(p));
             return out;
           })
      .def("to_dict", [](const RobotModel & r) { return to_py(to_json(r)); });

  m.def("load_model", &load_robot_model, py::arg("path"));
  m.def("com_position", [](const RobotModel & r, const Eigen::VectorXd & q) { return point(com_position(r, q)); });
  m.def("hand_position", [](const RobotModel & r, const Eigen::VectorXd & q) { return point(hand_position(r, q)); });
  m.def(
      "zmp_static_full",
      [](const RobotModel & r, const Eigen::VectorXd & q, double f_h1, double f_h2) {
        return zmp_static_full(r, q, {f_h1, f_h2});
      },
      py::arg("model"), py::arg("q"), py::arg("f_h1"), py::arg("f_h2") = 0.0);
  m.def(
      "zmp_static_simplified",
      [](const RobotModel & r, const Eigen::VectorXd & q, double f_h1) { return zmp_static_simplified(r, q, f_h1); },
      py::arg("model"), py::arg("q"), py::arg("f_h1"));
  m.def(
      "eval_zmp", [](const RobotModel & r, const py::object & input) { return to_py(eval_zmp(r, from_py(input))); },
      py::arg("model"), py::arg("input"));

  m.def(
      "plan",
      [](const RobotModel & r, const std::string & mode, const py::object & config) {
        const auto problem = planner_problem_from_json(from_py(config), r);
        std::pair<ManifoldSpec, SolveReport> result;
        {
          py::gil_scoped_release release;
          result = solve_manifold(problem, planner_mode_from_string(mode));
        }
        return py::make_tuple(to_py(to_json(result.first)), to_py(to_json(result.second)));
      },
      py::arg("model"), py::arg("mode") = "robust", py::arg("config") = py::none(),
      "Returns (manifold, report) as dicts.");

  m.def(
      "eval_config",
      [](const py::object & manifold, double s) { return Eigen::VectorXd(eval_config(manifold_from_json(from_py(manifold)), s)); },
      py::arg("manifold"), py::arg("s"));

  m.def(
      "simulate",
      [](const RobotModel & r, const py::object & manifold, double M, double h, const py::object & controller,
         const py::object & simulation) {
        const auto spec = manifold_from_json(from_py(manifold));
        const auto ctrl = controller_settings_from_json(from_py(controller));
        const auto sim = sim_settings_from_json(from_py(simulation));
        EpisodeResult result;
        {
          py::gil_scoped_release release;
          result = run_episode(r, spec, ctrl, ForceProfile::sinusoid(M, h), sim);
        }
        return to_py(to_json(result, true));
      },
      py::arg("model"), py::arg("manifold"), py::arg("M"), py::arg("h"), py::arg("controller") = py::none(),
      py::arg("simulation") = py::none());
}
