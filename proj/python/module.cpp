#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pdelearn/alm.hpp"
#include "pdelearn/diagnostics.hpp"
#include "pdelearn/metrics_io.hpp"
#include "pdelearn/network.hpp"
#include "pdelearn/problems.hpp"
#include "pdelearn/sampling.hpp"

namespace py = pybind11;
using namespace pdelearn;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constrained PDE learning via augmented Lagrangian training";

  py::enum_<Activation>(m, "Activation")
      .value("tanh", Activation::Tanh)
      .value("sigmoid", Activation::Sigmoid);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init([](int input_dim, int output_dim, int hidden_layers, int hidden_width,
                       const std::string& activation) {
             NetworkConfig c{input_dim, output_dim, hidden_layers, hidden_width,
                             activation_from_string(activation)};
             c.validate();
             return c;
           }),
           py::arg("input_dim"), py::arg("output_dim"), py::arg("hidden_layers"),
           py::arg("hidden_width"), py::arg("activation") = "tanh")
      .def_readonly("input_dim", &NetworkConfig::input_dim)
      .def_readonly("output_dim", &NetworkConfig::output_dim)
      .def_readonly("hidden_layers", &NetworkConfig::hidden_layers)
      .def_readonly("hidden_width", &NetworkConfig::hidden_width)
      .def("param_count", &NetworkConfig::param_count);

  m.def("init_xavier", &init_xavier, py::arg("config"), py::arg("seed"));
  m.def(
      "forward",
      [](const NetworkConfig& c, const ParamVector& theta, const std::vector<double>& x) {
        return forward_values(c, theta, x);
      },
      py::arg("config"), py::arg("theta"), py::arg("x"));

  m.def("sobol", &sobol, py::arg("n"), py::arg("dim"), py::arg("skip") = 0);

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def_readonly("name", &ProblemSpec::name)
      .def_readonly("epochs", &ProblemSpec::epochs)
      .def_readonly("n_interior", &ProblemSpec::n_interior)
      .def_property_readonly("net", [](const ProblemSpec& s) { return s.net; });

  m.def("problem", &problem_by_name, py::arg("name"), py::arg("k") = 2.0,
        py::arg("alpha") = 1e-4);

  m.def(
      "self_consistency",
      [](const std::string& name, double k, double alpha, int n) {
        auto r = self_consistency(problem_by_name(name, k, alpha), n);
        return py::dict(py::arg("data_residual") = r.data_residual,
                        py::arg("flux_constraint") = r.flux_constraint,
                        py::arg("dirichlet") = r.dirichlet, py::arg("neumann") = r.neumann,
                        py::arg("initial") = r.initial, py::arg("max") = r.max_all());
      },
      py::arg("name"), py::arg("k") = 2.0, py::arg("alpha") = 1e-4, py::arg("n_points") = 100);

  m.def("huber", [](double r, double delta) { return huber_value(r, {delta}); }, py::arg("r"),
        py::arg("delta") = 1.0);
  m.def("condition_number", &convection_diffusion_condition, py::arg("alpha"));

  m.def("rel_l2", [](std::vector<double> p, std::vector<double> e) { return rel_l2(p, e); });
  m.def("linf", [](std::vector<double> p, std::vector<double> e) { return linf(p, e); });
  m.def("mae", [](std::vector<double> p, std::vector<double> e) { return mae(p, e); });
  m.def("mse", [](std::vector<double> p, std::vector<double> e) { return mse(p, e); });

  py::class_<EpochRow>(m, "EpochRow")
      .def_readonly("epoch", &EpochRow::epoch)
      .def_readonly("loss_total", &EpochRow::loss_total)
      .def_readonly("loss_data", &EpochRow::loss_data)
      .def_readonly("mu", &EpochRow::mu)
      .def_readonly("mu_next", &EpochRow::mu_next)
      .def_readonly("max_lambda_B", &EpochRow::max_lambda_B)
      .def_readonly("rel_l2_u", &EpochRow::rel_l2_u)
      .def_readonly("linf_u", &EpochRow::linf_u)
      .def_readonly("mae_u", &EpochRow::mae_u);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("problem", &RunRecord::problem)
      .def_readonly("seed", &RunRecord::seed)
      .def_readonly("failed", &RunRecord::failed)
      .def_readonly("failure", &RunRecord::failure)
      .def_readonly("theta", &RunRecord::theta)
      .def_readonly("history", &RunRecord::history)
      .def("save", [](const RunRecord& r, const std::string& dir) { save_run(r, dir); },
           py::arg("dir"));

  m.def(
      "train",
      [](const std::string& name, int epochs, std::uint64_t seed, double mu_max,
         double huber_delta, double k, double alpha, int metric_every) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.mu_max = mu_max;
        cfg.huber.delta = huber_delta;
        cfg.metric_every = metric_every;
        return train(problem_by_name(name, k, alpha), cfg);
      },
      py::arg("problem"), py::arg("epochs") = -1, py::arg("seed") = 0, py::arg("mu_max") = -1.0,
      py::arg("huber_delta") = 1.0, py::arg("k") = 2.0, py::arg("alpha") = 1e-4,
      py::arg("metric_every") = 1);

  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "perturb",
      [](const ParamVector& theta, const NetworkConfig& c, double scale, std::uint64_t seed) {
        return perturb(theta, c, scale, seed);
      },
      py::arg("theta"), py::arg("config"), py::arg("scale") = 0.05, py::arg("seed") = 0);
}
