/*
 * Copyright 2026 The fungp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>

#include "fungp/archive.hpp"
#include "fungp/basis.hpp"
#include "fungp/cli.hpp"
#include "fungp/fr.hpp"
#include "fungp/gpfr.hpp"
#include "fungp/gpr.hpp"
#include "fungp/kernels.hpp"
#include "fungp/mgpr.hpp"
#include "fungp/nsgpr.hpp"

namespace py = pybind11;
using namespace fungp;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

KernelSpec make_spec(const std::vector<std::string>& terms, int input_dim, double gamma, double nu) {
  KernelSpec spec;
  for (const auto& t : terms) spec.terms.push_back(parse_family(t));
  spec.input_dim = input_dim;
  spec.gamma = gamma;
  spec.nu = nu;
  spec.validate();
  return spec;
}

py::dict prediction_dict(const PredictionResult& r) {
  py::dict d;
  d["mean"] = r.mean;
  d["sd"] = r.sd;
  d["noise_free"] = r.noise_free;
  d["warnings"] = r.warnings;
  return d;
}

py::dict report_dict(const FitReport& r) { return to_python(fit_report_json(r)); }

template <class Model>
std::string dump_archive(const Model& m) {
  return archive_json(AnyModel(m)).dump(2);
}

py::object load_archive(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("archive: ") + e.what());
  }
  return std::visit([](auto&& m) { return py::cast(std::move(m)); }, archive_model(j));
}

int run_config(const py::object& config, const std::string& output_dir, std::optional<std::uint64_t> seed,
               int threads) {
  cli::RunOptions o;
  o.output_dir = output_dir;
  o.seed = seed;
  o.threads = threads;
  std::ostringstream err;
  const int code = cli::run(from_python(config), o, err);
  if (!err.str().empty()) py::module_::import("sys").attr("stderr").attr("write")(err.str());
  return code;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian process functional regression core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "cov_matrix",
      [](const std::vector<std::string>& terms, const Vector& theta, const Matrix& x1, std::optional<Matrix> x2,
         double gamma, double nu, bool noise) {
        const KernelSpec spec = make_spec(terms, static_cast<int>(x1.cols()), gamma, nu);
        return cov_matrix(spec, HyperParams{theta}, x1, x2 ? *x2 : x1, noise && !x2);
      },
      py::arg("terms"), py::arg("theta"), py::arg("x1"), py::arg("x2") = py::none(), py::arg("gamma") = 2.0,
      py::arg("nu") = 1.5, py::arg("noise") = true,
      "Covariance matrix of a kernel sum; noise is added only when x2 is omitted.");
  m.def(
      "param_names",
      [](const std::vector<std::string>& terms, int input_dim, double gamma, double nu) {
        return param_names(make_spec(terms, input_dim, gamma, nu));
      },
      py::arg("terms"), py::arg("input_dim") = 1, py::arg("gamma") = 2.0, py::arg("nu") = 1.5);

  m.def(
      "bspline_basis",
      [](double lo, double hi, Index nbasis, int norder, const Vector& t, int deriv) {
        return basis_eval(BasisSystem::bspline(lo, hi, nbasis, norder), t, deriv);
      },
      py::arg("lo"), py::arg("hi"), py::arg("nbasis"), py::arg("norder"), py::arg("t"), py::arg("deriv") = 0);

  // ---------------------------------------------------------------- gpr
  py::class_<GPModel>(m, "GPModel")
      .def_property_readonly("theta", [](const GPModel& g) { return g.hyper().values; })
      .def_property_readonly("param_names", [](const GPModel& g) { return param_names(g.spec()); })
      .def_property_readonly("log_likelihood", [](const GPModel& g) { return g.report().log_likelihood; })
      .def_property_readonly("report", [](const GPModel& g) { return report_dict(g.report()); })
      .def(
          "predict",
          [](const GPModel& g, const Matrix& tstar, bool noise_free, std::optional<Index> regressors,
             std::uint64_t seed, Index realization) {
            PredictOptions o;
            o.noise_free = noise_free;
            o.regressor_size = regressors;
            o.seed = seed;
            o.realization = realization;
            return prediction_dict(predict(g, tstar, o));
          },
          py::arg("tstar"), py::arg("noise_free") = false, py::arg("regressor_size") = py::none(),
          py::arg("seed") = 0, py::arg("realization") = 0)
      .def("to_json", &dump_archive<GPModel>);
  m.def(
      "fit_gpr",
      [](const Matrix& x, const Matrix& y, const std::vector<std::string>& terms, double gamma, double nu,
         const std::string& mean, int restarts, std::uint64_t seed, std::optional<Index> subset_size) {
        const Dataset data = Dataset::shared(x, y);
        FitOptions o;
        o.restarts = restarts;
        o.seed = seed;
        o.subset_size = subset_size;
        const KernelSpec spec = make_spec(terms, static_cast<int>(x.cols()), gamma, nu);
        py::gil_scoped_release release;
        return fit(data, spec, mean_fit(data, parse_mean_kind(mean)), o);
      },
      py::arg("x"), py::arg("y"), py::arg("terms") = std::vector<std::string>{"pow.ex"}, py::arg("gamma") = 2.0,
      py::arg("nu") = 1.5, py::arg("mean") = "zero", py::arg("restarts") = 5, py::arg("seed") = 0,
      py::arg("subset_size") = py::none(),
      "Empirical Bayes fit on a shared grid: x is n x Q, y is n x M.");

  // ---------------------------------------------------------------- nsgpr
  py::class_<NSGPRModel>(m, "NSGPRModel")
      .def_property_readonly("theta", [](const NSGPRModel& g) { return to_python(theta_json(AnyModel(g))); })
      .def_property_readonly("log_likelihood", [](const NSGPRModel& g) { return g.report().log_likelihood; })
      .def_property_readonly("report", [](const NSGPRModel& g) { return report_dict(g.report()); })
      .def(
          "predict",
          [](const NSGPRModel& g, const Matrix& tstar, bool noise_free, Index realization) {
            return prediction_dict(nsgpr_predict(g, tstar, noise_free, realization));
          },
          py::arg("tstar"), py::arg("noise_free") = false, py::arg("realization") = 0)
      .def("to_json", &dump_archive<NSGPRModel>);
  m.def(
      "fit_nsgpr",
      [](const Matrix& x, const Matrix& y, const std::string& correlation, double gamma, double nu, int nbasis,
         const std::vector<int>& which_tau, const std::vector<bool>& cyclic, bool unit_signal_variance,
         bool zero_noise_variance, bool sep_cov, const std::string& mean, int restarts, std::uint64_t seed) {
        NSFitOptions o;
        o.corr.family = parse_family(correlation);
        o.corr.gamma = gamma;
        o.corr.nu = nu;
        o.nbasis = nbasis;
        o.which_tau = which_tau;
        o.cyclic = cyclic;
        o.flags = {unit_signal_variance, zero_noise_variance, sep_cov};
        o.mean = parse_mean_kind(mean);
        o.restarts = restarts;
        o.seed = seed;
        const Dataset data = Dataset::shared(x, y);
        py::gil_scoped_release release;
        return nsgpr_fit(data, o);
      },
      py::arg("x"), py::arg("y"), py::arg("correlation") = "pow.ex", py::arg("gamma") = 2.0, py::arg("nu") = 1.5,
      py::arg("nbasis") = 5, py::arg("which_tau") = std::vector<int>{}, py::arg("cyclic") = std::vector<bool>{},
      py::arg("unit_signal_variance") = false, py::arg("zero_noise_variance") = false, py::arg("sep_cov") = false,
      py::arg("mean") = "zero", py::arg("restarts") = 3, py::arg("seed") = 0,
      "which_tau holds 0-based input columns carrying varying coefficients.");

  // ---------------------------------------------------------------- mgpr
  py::class_<MGPRModel>(m, "MGPRModel")
      .def_property_readonly("theta", [](const MGPRModel& g) { return g.hyper().values; })
      .def_property_readonly("param_names", [](const MGPRModel& g) { return g.hyper().names(); })
      .def_property_readonly("log_likelihood", [](const MGPRModel& g) { return g.report().log_likelihood; })
      .def_property_readonly("report", [](const MGPRModel& g) { return report_dict(g.report()); })
      .def(
          "predict",
          [](const MGPRModel& g, const std::vector<Matrix>& tstar, std::optional<std::vector<Matrix>> obs_inputs,
             std::optional<std::vector<Vector>> obs_response, Index realization, bool noise_free) {
            std::vector<OutputObservations> obs;
            if (obs_inputs || obs_response) {
              if (!obs_inputs || !obs_response || obs_inputs->size() != obs_response->size())
                throw ValidationError("observations need matching inputs and responses per output");
              for (size_t j = 0; j < obs_inputs->size(); ++j)
                obs.push_back({(*obs_inputs)[j], (*obs_response)[j]});
            } else {
              obs = mgpr_training_observations(g, realization);
            }
            std::vector<Matrix> ts;
            for (const auto& t : tstar) ts.push_back(t);
            py::list out;
            for (const auto& r : mgpr_predict(g, obs, ts, noise_free)) out.append(prediction_dict(r));
            return out;
          },
          py::arg("tstar"), py::arg("obs_inputs") = py::none(), py::arg("obs_response") = py::none(),
          py::arg("realization") = 0, py::arg("noise_free") = false,
          "Without observations, conditions on the given training realization.")
      .def("to_json", &dump_archive<MGPRModel>);
  m.def(
      "fit_mgpr",
      [](const std::vector<Matrix>& inputs, const std::vector<Matrix>& responses, const std::string& mean,
         int restarts, std::uint64_t seed, std::optional<Index> subset_size) {
        MultiDataset data;
        for (const auto& x : inputs) data.inputs.push_back(x);
        data.responses = responses;
        MGPRFitOptions o;
        o.mean = parse_mean_kind(mean);
        o.restarts = restarts;
        o.seed = seed;
        o.subset_size = subset_size;
        py::gil_scoped_release release;
        return mgpr_fit(data, o);
      },
      py::arg("inputs"), py::arg("responses"), py::arg("mean") = "zero", py::arg("restarts") = 5,
      py::arg("seed") = 0, py::arg("subset_size") = py::none(),
      "inputs[j] is n_j x Q and responses[j] is n_j x M for output j.");

  // ---------------------------------------------------------------- gpfr
  py::class_<GPFRModel>(m, "GPFRModel")
      .def_property_readonly("theta", [](const GPFRModel& g) { return g.gp.hyper().values; })
      .def_property_readonly("param_names", [](const GPFRModel& g) { return param_names(g.gp.spec()); })
      .def_property_readonly("beta", [](const GPFRModel& g) { return g.fr.b; })
      .def_property_readonly("report", [](const GPFRModel& g) { return report_dict(g.gp.report()); })
      .def(
          "predict",
          [](const GPFRModel& g, const Vector& tstar, const Vector& u, const std::vector<Vector>& gpx,
             std::optional<Vector> obs_t, std::optional<Vector> obs_y, const std::vector<Vector>& obs_gpx,
             bool noise_free) {
            const PredictionCovariates cov{u, {}, gpx};
            GPFRPrediction p;
            if (obs_t || obs_y) {
              if (!obs_t || !obs_y) throw ValidationError("observed curve needs both obs_t and obs_y");
              p = gpfr_predict_type1(g, NewCurve{*obs_t, *obs_y, {}, obs_gpx}, tstar, cov, noise_free);
            } else {
              p = gpfr_predict_type2(g, tstar, cov, noise_free);
            }
            py::dict d = prediction_dict(p.result);
            d["type"] = prediction_type_name(p.type);
            d["mean_part"] = p.mean_part;
            return d;
          },
          py::arg("tstar"), py::arg("u"), py::arg("gpx") = std::vector<Vector>{}, py::arg("obs_t") = py::none(),
          py::arg("obs_y") = py::none(), py::arg("obs_gpx") = std::vector<Vector>{}, py::arg("noise_free") = false,
          "Conditions on the observed part of the curve when given, otherwise mixes over training curves.")
      .def("to_json", &dump_archive<GPFRModel>);
  m.def(
      "fit_gpfr",
      [](const std::vector<Vector>& t, const std::vector<Vector>& y, const Matrix& u,
         const std::vector<std::vector<Vector>>& gpx, const std::vector<std::string>& terms, double gamma,
         double nu, std::optional<Index> nbasis, double lambda, bool gp_time, int restarts, std::uint64_t seed) {
        GPFRData d;
        d.t = t;
        d.y = y;
        d.u = u;
        d.gpx = gpx;
        GPFROptions o;
        o.fr.response.nbasis = nbasis;
        o.fr.response.lambda = lambda;
        o.kernel = make_spec(terms, 1, gamma, nu);
        o.gp_time = gp_time;
        o.fit.restarts = restarts;
        o.fit.seed = seed;
        o.fitting = true;
        py::gil_scoped_release release;
        return gpfr_fit(d, o);
      },
      py::arg("t"), py::arg("y"), py::arg("u"), py::arg("gpx") = std::vector<std::vector<Vector>>{},
      py::arg("terms") = std::vector<std::string>{"pow.ex"}, py::arg("gamma") = 2.0, py::arg("nu") = 1.5,
      py::arg("nbasis") = py::none(), py::arg("lambda_") = 1e-4, py::arg("gp_time") = false,
      py::arg("restarts") = 5, py::arg("seed") = 0,
      "Curves t[m], y[m] with scalar covariates u (M x p); gpx[k][m] are GP functional inputs.");

  m.def("load_model", &load_archive, py::arg("archive"), "Rebuilds a model from its archive JSON text.");
  m.def("run", &run_config, py::arg("config"), py::arg("output_dir") = ".", py::arg("seed") = py::none(),
        py::arg("threads") = 1, "Runs a command-line configuration; returns the exit code.");
}
