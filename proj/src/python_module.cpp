#include "asymdec/cli.hpp"
#include "asymdec/convexify.hpp"
#include "asymdec/errors.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/metrics.hpp"
#include "asymdec/models.hpp"
#include "asymdec/pretrial.hpp"
#include "asymdec/simlab.hpp"
#include "asymdec/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace asymdec;

namespace {

Json parse(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

// Numeric columns are how tabular quartets and "detention_days" reach the
// loss; text columns carry "crime" for the pretrial quartet.
Dataset make_dataset(const RowMatrix& X, const std::vector<int>& y, const std::vector<int>& group,
                     std::optional<std::vector<std::string>> names,
                     const std::map<std::string, std::vector<double>>& numeric,
                     const std::map<std::string, std::vector<std::string>>& text) {
  Dataset data;
  data.X = X;
  data.y.reserve(y.size());
  for (int label : y) data.y.push_back(label > 0 ? 1 : -1);
  data.group = group;
  if (names) {
    data.feature_names = *names;
  } else {
    for (Eigen::Index j = 0; j < X.cols(); ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
  }
  for (const auto& [k, v] : numeric) data.numeric_columns[k] = v;
  for (const auto& [k, v] : text) data.text_columns[k] = v;
  data.check();
  return data;
}

}  // namespace

PYBIND11_MODULE(_asymdec, m) {
  m.doc() = "Binary decisions under covariate-driven asymmetric losses";
  m.attr("__version__") = std::string(cli::kVersion);

  py::register_exception<Error>(m, "AsymdecError", PyExc_ValueError);

  m.def("phi", [](const std::string& kind, double z) { return phi(parse_convexifier(kind), z); },
        py::arg("kind"), py::arg("z"));
  m.def("inf_q", [](const std::string& kind, double x, double c) {
        return inf_q_closed_form(parse_convexifier(kind), x, c);
      },
      py::arg("kind"), py::arg("x"), py::arg("c"));
  m.def("calibration_gap", [](const std::string& kind, double x, double c) {
        return calibration_gap(parse_convexifier(kind), x, c);
      },
      py::arg("kind"), py::arg("x"), py::arg("c"));
  m.def("calibration_constants", [](const std::string& kind) {
        const auto k = calibration_constants(parse_convexifier(kind));
        return py::make_tuple(k.exponent, k.constant);
      },
      py::arg("kind"));

  m.def("net_losses", [](double pp, double np, double pn, double nn) {
        const Cells cells{pp, np, pn, nn};
        const auto pair = compute_net_losses(cells);
        return py::dict(py::arg("a") = pair.a, py::arg("b") = pair.b, py::arg("omega_pos") = weight(pair, 1),
                        py::arg("omega_neg") = weight(pair, -1), py::arg("c") = threshold(cells));
      },
      py::arg("pp"), py::arg("np"), py::arg("pn"), py::arg("nn"));

  m.def("fit", [](const RowMatrix& X, const std::vector<int>& y, const std::string& loss, const std::string& family,
                  const std::string& convexifier, const std::vector<int>& group, const std::string& config,
                  std::uint64_t seed, std::optional<std::vector<std::string>> names,
                  const std::map<std::string, std::vector<double>>& numeric,
                  const std::map<std::string, std::vector<std::string>>& text) {
        const Dataset data = make_dataset(X, y, group, std::move(names), numeric, text);
        const QuartetPtr quartet = quartet_from_json(parse(loss, "loss spec"));
        TrainConfig tc = config.empty() ? TrainConfig{} : TrainConfig::from_json(parse(config, "training config"));
        tc.seed = seed;
        tc.convexifier = parse_convexifier(convexifier);
        tc.check();
        py::gil_scoped_release release;
        const FitResult result = fit(weigh_dataset(*quartet, data), parse_family(family), tc);
        return result.model.to_json().dump();
      },
      py::arg("X"), py::arg("y"), py::arg("loss"), py::arg("family") = "logit",
      py::arg("convexifier") = "logistic", py::arg("group") = std::vector<int>{}, py::arg("config") = "",
      py::arg("seed") = 0, py::arg("feature_names") = py::none(),
      py::arg("numeric_columns") = std::map<std::string, std::vector<double>>{},
      py::arg("text_columns") = std::map<std::string, std::vector<std::string>>{});

  m.def("predict", [](const std::string& model_json, const RowMatrix& X, std::optional<Eigen::VectorXd> c) {
        const auto model = SoftDecisionModel::from_json(parse(model_json, "model"));
        const Eigen::VectorXd cs = c ? *c : Eigen::VectorXd::Constant(X.rows(), model.fixed_threshold.value_or(0.5));
        return model.predict_soft(X, cs);
      },
      py::arg("model"), py::arg("X"), py::arg("c") = py::none());

  m.def("evaluate", [](const std::string& model_json, const RowMatrix& X, const std::vector<int>& y,
                       const std::string& loss, const std::vector<int>& group,
                       const std::map<std::string, std::vector<double>>& numeric,
                       const std::map<std::string, std::vector<std::string>>& text) {
        const auto model = SoftDecisionModel::from_json(parse(model_json, "model"));
        const Dataset data = make_dataset(X, y, group, model.feature_names, numeric, text);
        const QuartetPtr quartet = quartet_from_json(parse(loss, "loss spec"));
        return evaluate(model, data, *quartet).to_json().dump();
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("loss"), py::arg("group") = std::vector<int>{},
      py::arg("numeric_columns") = std::map<std::string, std::vector<double>>{},
      py::arg("text_columns") = std::map<std::string, std::vector<std::string>>{});

  m.def("simulate", [](const std::string& config, const std::string& experiment, std::size_t jobs) {
        const auto sim_config = sim::SimConfig::from_json(parse(config.empty() ? "{}" : config, "simulation config"));
        py::gil_scoped_release release;
        if (experiment == "baseline") return sim::run_comparison(sim_config, jobs).summary_json().dump();
        if (experiment == "plugin") return sim::run_plugin_comparison(sim_config, jobs).summary_json().dump();
        if (experiment == "mistakes") return sim::run_mistakes(sim_config, jobs).to_json().dump();
        throw ConfigError("experiment must be baseline, plugin or mistakes");
      },
      py::arg("config") = "", py::arg("experiment") = "baseline", py::arg("jobs") = 1);

  m.def("pretrial_cells", [](int group, const std::string& crime, double detention_days, const std::string& tables) {
        const pretrial::PretrialQuartet quartet(tables.empty() ? pretrial::CostBenefitTables{}
                                                               : pretrial::CostBenefitTables::from_json(parse(tables, "cost tables")));
        const Cells cells = quartet.cells_for(group, crime, detention_days);
        return py::make_tuple(cells.pp, cells.np, cells.pn, cells.nn);
      },
      py::arg("group"), py::arg("crime"), py::arg("detention_days"), py::arg("tables") = "");
}
