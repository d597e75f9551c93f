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

#include "fungp/archive.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace fungp {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key, const char* where) {
  require(j.is_object() && j.contains(key),
          std::string("archive: missing '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("archive: malformed '") + key + "' in " + where);
  }
}

const json& node(const json& j, const char* key, const char* where) {
  require(j.is_object() && j.contains(key),
          std::string("archive: missing '") + key + "' in " + where);
  return j.at(key);
}

json vectors_json(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(to_json_vector(v));
  return a;
}

std::vector<Vector> vectors_from(const json& j) {
  require(j.is_array(), "archive: expected an array of vectors");
  std::vector<Vector> out;
  for (const auto& e : j) out.push_back(from_json_vector(e));
  return out;
}

json nested_vectors_json(const std::vector<std::vector<Vector>>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vectors_json(v));
  return a;
}

std::vector<std::vector<Vector>> nested_vectors_from(const json& j) {
  require(j.is_array(), "archive: expected nested vector arrays");
  std::vector<std::vector<Vector>> out;
  for (const auto& e : j) out.push_back(vectors_from(e));
  return out;
}

// FNV-1a over the raw bytes of each double.
struct Hasher {
  std::uint64_t h = 1469598103934665603ULL;
  Index rows = 0;
  void add(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  void add(const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) add(m(i, j));
  }
  std::string hex() const {
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << h;
    return s.str();
  }
};

void hash_dataset(Hasher& h, const Dataset& d) {
  if (d.shared_grid()) {
    h.rows += d.grid().rows();
    h.add(d.grid());
    h.add(d.responses());
  } else {
    for (Index m = 0; m < d.realizations(); ++m) {
      h.rows += d.rows(m);
      h.add(d.inputs(m));
      h.add(Matrix(d.response(m)));
    }
  }
}

json kernel_json(const KernelSpec& s) {
  json terms = json::array();
  for (auto f : s.terms) terms.push_back(std::string(family_name(f)));
  return {{"terms", terms}, {"gamma", s.gamma}, {"nu", s.nu}, {"input_dim", s.input_dim}};
}

KernelSpec kernel_from(const json& j) {
  KernelSpec s;
  s.terms.clear();
  for (const auto& t : node(j, "terms", "kernel")) s.terms.push_back(parse_family(t.get<std::string>()));
  s.gamma = field<double>(j, "gamma", "kernel");
  s.nu = field<double>(j, "nu", "kernel");
  s.input_dim = field<int>(j, "input_dim", "kernel");
  s.validate();
  return s;
}

json mean_json(const MeanModel& m) {
  return {{"kind", mean_kind_name(m.kind)},
          {"coefficients", to_json_vector(m.coefficients)},
          {"grid", to_json_matrix(m.grid)},
          {"values", to_json_vector(m.values)}};
}

MeanModel mean_from(const json& j) {
  MeanModel m;
  m.kind = parse_mean_kind(field<std::string>(j, "kind", "mean"));
  m.coefficients = from_json_vector(node(j, "coefficients", "mean"));
  m.grid = from_json_matrix(node(j, "grid", "mean"));
  m.values = from_json_vector(node(j, "values", "mean"));
  return m;
}

json dataset_json(const Dataset& d) {
  if (d.shared_grid())
    return {{"shared", true}, {"grid", to_json_matrix(d.grid())},
            {"responses", to_json_matrix(d.responses())}};
  json rs = json::array();
  for (Index m = 0; m < d.realizations(); ++m)
    rs.push_back({{"inputs", to_json_matrix(d.inputs(m))}, {"response", to_json_vector(d.response(m))}});
  return {{"shared", false}, {"realizations", rs}};
}

Dataset dataset_from(const json& j) {
  if (field<bool>(j, "shared", "training data"))
    return Dataset::shared(from_json_matrix(node(j, "grid", "training data")),
                           from_json_matrix(node(j, "responses", "training data")));
  std::vector<Realization> rs;
  for (const auto& r : node(j, "realizations", "training data"))
    rs.push_back({from_json_matrix(node(r, "inputs", "realization")),
                  from_json_vector(node(r, "response", "realization"))});
  return Dataset::ragged(std::move(rs));
}

// Deterministic summary only; restart details and timing live in the fit report.
json report_summary(const FitReport& r) {
  return {{"converged", r.converged},
          {"log_likelihood", to_json_number(r.log_likelihood)},
          {"initial_log_likelihood", to_json_number(r.initial_log_likelihood)},
          {"gradient_norm", to_json_number(r.gradient_norm)},
          {"iterations", r.iterations},
          {"analytic_gradient", r.analytic_gradient}};
}

FitReport report_from(const json& j) {
  FitReport r;
  if (j.is_null()) return r;
  r.converged = field<bool>(j, "converged", "report");
  r.log_likelihood = from_json_number(node(j, "log_likelihood", "report"));
  r.initial_log_likelihood = from_json_number(node(j, "initial_log_likelihood", "report"));
  r.gradient_norm = from_json_number(node(j, "gradient_norm", "report"));
  r.iterations = field<int>(j, "iterations", "report");
  r.analytic_gradient = field<bool>(j, "analytic_gradient", "report");
  return r;
}

json basis_json(const BasisSystem& b) {
  return {{"kind", b.kind == BasisKind::BSpline ? "bspline" : "fourier"},
          {"nbasis", b.nbasis}, {"norder", b.norder}, {"lo", b.lo}, {"hi", b.hi},
          {"period", b.period}};
}

BasisSystem basis_from(const json& j) {
  BasisSystem b;
  const auto kind = field<std::string>(j, "kind", "basis");
  require(kind == "bspline" || kind == "fourier", "archive: unknown basis kind '" + kind + "'");
  b.kind = kind == "bspline" ? BasisKind::BSpline : BasisKind::Fourier;
  b.nbasis = field<Index>(j, "nbasis", "basis");
  b.norder = field<int>(j, "norder", "basis");
  b.lo = field<double>(j, "lo", "basis");
  b.hi = field<double>(j, "hi", "basis");
  b.period = field<double>(j, "period", "basis");
  return b;
}

json gp_body(const GPModel& m) {
  return {{"kernel", kernel_json(m.spec())},
          {"log_theta", to_json_vector(m.hyper().values)},
          {"mean", mean_json(m.mean())},
          {"train", dataset_json(m.train())},
          {"report", report_summary(m.report())}};
}

GPModel gp_from(const json& j) {
  return GPModel(kernel_from(node(j, "kernel", "model")),
                 HyperParams{from_json_vector(node(j, "log_theta", "model"))},
                 mean_from(node(j, "mean", "model")), dataset_from(node(j, "train", "model")),
                 report_from(j.value("report", json())));
}

json ns_body(const NSGPRModel& m) {
  json j = ns_coefficients_json(m.corr(), m.coeffs());
  j["mean"] = mean_json(m.mean());
  j["train"] = dataset_json(m.train());
  j["report"] = report_summary(m.report());
  return j;
}

NSGPRModel ns_from(const json& j) {
  const json& cj = node(j, "correlation", "model");
  NSCorrelation corr;
  corr.family = parse_family(field<std::string>(cj, "family", "correlation"));
  corr.gamma = field<double>(cj, "gamma", "correlation");
  corr.nu = field<double>(cj, "nu", "correlation");
  const json& k = node(j, "coefficients", "model");
  VaryingCoeffs c;
  c.input_dim = field<Index>(k, "input_dim", "coefficients");
  c.which_tau = field<std::vector<int>>(k, "which_tau", "coefficients");
  c.nbasis = field<int>(k, "nbasis", "coefficients");
  c.cyclic = field<std::vector<bool>>(k, "cyclic", "coefficients");
  c.lo = from_json_vector(node(k, "lo", "coefficients"));
  c.hi = from_json_vector(node(k, "hi", "coefficients"));
  c.log_sigma = from_json_vector(node(k, "log_sigma", "coefficients"));
  c.log_radius = from_json_matrix(node(k, "log_radius", "coefficients"));
  c.angle = from_json_matrix(node(k, "angle", "coefficients"));
  c.noise_log_var = from_json_number(node(k, "noise_log_var", "coefficients"));
  c.flags.unit_signal_variance = field<bool>(k, "unit_signal_variance", "coefficients");
  c.flags.zero_noise_variance = field<bool>(k, "zero_noise_variance", "coefficients");
  c.flags.sep_cov = field<bool>(k, "sep_cov", "coefficients");
  return NSGPRModel(corr, std::move(c), mean_from(node(j, "mean", "model")),
                    dataset_from(node(j, "train", "model")), report_from(j.value("report", json())));
}

json mgpr_body(const MGPRModel& m) {
  json means = json::array();
  for (const auto& mu : m.means()) means.push_back(mean_json(mu));
  json inputs = json::array(), responses = json::array();
  for (Index j = 0; j < m.train().outputs(); ++j) {
    inputs.push_back(to_json_matrix(m.train().inputs[static_cast<size_t>(j)]));
    responses.push_back(to_json_matrix(m.train().responses[static_cast<size_t>(j)]));
  }
  return {{"outputs", m.hyper().outputs},
          {"input_dim", m.hyper().input_dim},
          {"log_theta", to_json_vector(m.hyper().values)},
          {"means", means},
          {"train", {{"inputs", inputs}, {"responses", responses}}},
          {"report", report_summary(m.report())}};
}

MGPRModel mgpr_from(const json& j) {
  MGPRHyper hp;
  hp.outputs = field<Index>(j, "outputs", "model");
  hp.input_dim = field<Index>(j, "input_dim", "model");
  hp.values = from_json_vector(node(j, "log_theta", "model"));
  std::vector<MeanModel> means;
  for (const auto& mu : node(j, "means", "model")) means.push_back(mean_from(mu));
  const json& t = node(j, "train", "model");
  MultiDataset data;
  for (const auto& x : node(t, "inputs", "training data")) data.inputs.push_back(from_json_matrix(x));
  for (const auto& y : node(t, "responses", "training data")) data.responses.push_back(from_json_matrix(y));
  return MGPRModel(std::move(hp), std::move(means), std::move(data),
                   report_from(j.value("report", json())));
}

json gpfr_body(const GPFRModel& m) {
  const FRModel& f = m.fr;
  return {{"fr",
           {{"basis", basis_json(f.basis)},
            {"a", to_json_matrix(f.a)},
            {"b", to_json_matrix(f.b)},
            {"concurrent", f.concurrent},
            {"alpha", to_json_vector(f.alpha)},
            {"alpha_basis", basis_json(f.alpha_basis)},
            {"alpha_coef", to_json_matrix(f.alpha_coef)}}},
          {"gp", gp_body(m.gp)},
          {"gp_time", m.gp_time},
          {"train",
           {{"t", vectors_json(m.train.t)},
            {"y", vectors_json(m.train.y)},
            {"u", to_json_matrix(m.train.u)},
            {"fx", nested_vectors_json(m.train.fx)},
            {"gpx", nested_vectors_json(m.train.gpx)}}},
          {"residuals", vectors_json(m.residuals)},
          {"fitted_mean", vectors_json(m.fitted_mean)},
          {"fitted_sd", vectors_json(m.fitted_sd)}};
}

GPFRModel gpfr_from(const json& j) {
  GPFRModel m;
  const json& f = node(j, "fr", "model");
  m.fr.basis = basis_from(node(f, "basis", "fr"));
  m.fr.a = from_json_matrix(node(f, "a", "fr"));
  m.fr.b = from_json_matrix(node(f, "b", "fr"));
  m.fr.concurrent = field<bool>(f, "concurrent", "fr");
  m.fr.alpha = from_json_vector(node(f, "alpha", "fr"));
  m.fr.alpha_basis = basis_from(node(f, "alpha_basis", "fr"));
  m.fr.alpha_coef = from_json_matrix(node(f, "alpha_coef", "fr"));
  m.gp = gp_from(node(j, "gp", "model"));
  m.gp_time = field<bool>(j, "gp_time", "model");
  const json& t = node(j, "train", "model");
  m.train.t = vectors_from(node(t, "t", "training data"));
  m.train.y = vectors_from(node(t, "y", "training data"));
  m.train.u = from_json_matrix(node(t, "u", "training data"));
  m.train.fx = nested_vectors_from(node(t, "fx", "training data"));
  m.train.gpx = nested_vectors_from(node(t, "gpx", "training data"));
  m.residuals = vectors_from(node(j, "residuals", "model"));
  m.fitted_mean = vectors_from(node(j, "fitted_mean", "model"));
  m.fitted_sd = vectors_from(node(j, "fitted_sd", "model"));
  return m;
}

json named_values(const std::vector<std::string>& names, const Vector& log_values) {
  json log = json::array(), natural = json::array();
  for (Index i = 0; i < log_values.size(); ++i) {
    log.push_back(to_json_number(log_values(i)));
    natural.push_back(to_json_number(std::exp(log_values(i))));
  }
  return {{"names", names}, {"log", log}, {"natural", natural}};
}

std::vector<std::string> ns_names(const VaryingCoeffs& c) {
  std::vector<std::string> names;
  const Index k = c.surface_size();
  auto surface = [&](const std::string& base) {
    for (Index i = 0; i < k; ++i) names.push_back(base + "[" + std::to_string(i + 1) + "]");
  };
  if (!c.flags.unit_signal_variance) surface("log_sigma");
  for (Index q = 0; q < c.log_radius.cols(); ++q) surface("log_radius" + std::to_string(q + 1));
  if (!c.flags.sep_cov)
    for (Index a = 0; a < c.angle.cols(); ++a) surface("angle" + std::to_string(a + 1));
  if (!c.flags.zero_noise_variance) names.push_back("noise");
  return names;
}

}  // namespace

json ns_coefficients_json(const NSCorrelation& corr, const VaryingCoeffs& c) {
  json cyc = json::array();
  for (bool b : c.cyclic) cyc.push_back(b);
  return {{"correlation",
           {{"family", std::string(family_name(corr.family))}, {"gamma", corr.gamma}, {"nu", corr.nu}}},
          {"coefficients",
           {{"input_dim", c.input_dim},
            {"which_tau", c.which_tau},
            {"nbasis", c.nbasis},
            {"cyclic", cyc},
            {"lo", to_json_vector(c.lo)},
            {"hi", to_json_vector(c.hi)},
            {"log_sigma", to_json_vector(c.log_sigma)},
            {"log_radius", to_json_matrix(c.log_radius)},
            {"angle", to_json_matrix(c.angle)},
            {"noise_log_var", to_json_number(c.noise_log_var)},
            {"unit_signal_variance", c.flags.unit_signal_variance},
            {"zero_noise_variance", c.flags.zero_noise_variance},
            {"sep_cov", c.flags.sep_cov}}}};
}

std::string model_kind(const AnyModel& model) {
  static const char* kinds[] = {"gpr", "nsgpr", "mgpr", "gpfr"};
  return kinds[model.index()];
}

json to_json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_json_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("archive: expected a number, found " + j.dump());
}

json to_json_vector(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(to_json_number(v(i)));
  return a;
}

Vector from_json_vector(const json& j) {
  require(j.is_array(), "archive: expected an array, found " + j.dump().substr(0, 40));
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = from_json_number(j[i]);
  return v;
}

json to_json_matrix(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k) data.push_back(to_json_number(m(i, k)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix from_json_matrix(const json& j) {
  const auto rows = field<Index>(j, "rows", "matrix");
  const auto cols = field<Index>(j, "cols", "matrix");
  const json& data = node(j, "data", "matrix");
  require(rows >= 0 && cols >= 0 && data.is_array() &&
              static_cast<Index>(data.size()) == rows * cols,
          "archive: matrix data does not match its shape");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = from_json_number(data[static_cast<size_t>(i * cols + k)]);
  return m;
}

Fingerprint fingerprint(const AnyModel& model) {
  Hasher h;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GPModel> || std::is_same_v<T, NSGPRModel>) {
          hash_dataset(h, m.train());
        } else if constexpr (std::is_same_v<T, MGPRModel>) {
          for (Index j = 0; j < m.train().outputs(); ++j) {
            h.rows += m.train().inputs[static_cast<size_t>(j)].rows();
            h.add(m.train().inputs[static_cast<size_t>(j)]);
            h.add(m.train().responses[static_cast<size_t>(j)]);
          }
        } else {
          for (Index c = 0; c < m.train.curves(); ++c) {
            const auto s = static_cast<size_t>(c);
            h.rows += m.train.t[s].size();
            h.add(Matrix(m.train.t[s]));
            h.add(Matrix(m.train.y[s]));
            if (m.train.u.cols() > 0) h.add(Matrix(m.train.u.row(c)));
            for (const auto& x : m.train.fx) h.add(Matrix(x[s]));
            for (const auto& x : m.train.gpx) h.add(Matrix(x[s]));
          }
        }
      },
      model);
  return {h.rows, h.hex()};
}

json theta_json(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GPModel>) {
          return named_values(param_names(m.spec()), m.hyper().values);
        } else if constexpr (std::is_same_v<T, NSGPRModel>) {
          return named_values(ns_names(m.coeffs()), ns_pack(m.coeffs()));
        } else if constexpr (std::is_same_v<T, MGPRModel>) {
          return named_values(m.hyper().names(), m.hyper().values);
        } else {
          return named_values(param_names(m.gp.spec()), m.gp.hyper().values);
        }
      },
      model);
}

json fit_report_json(const FitReport& r) {
  json j = report_summary(r);
  json starts = json::array();
  for (const auto& s : r.restarts)
    starts.push_back({{"start", to_json_vector(s.start)},
                      {"end", to_json_vector(s.end)},
                      {"log_likelihood", to_json_number(s.log_likelihood)},
                      {"gradient_norm", to_json_number(s.gradient_norm)},
                      {"iterations", s.iterations},
                      {"converged", s.converged},
                      {"message", s.message}});
  j["restarts"] = starts;
  return j;
}

json archive_json(const AnyModel& model, const json& metadata) {
  json body = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GPModel>) return gp_body(m);
        else if constexpr (std::is_same_v<T, NSGPRModel>) return ns_body(m);
        else if constexpr (std::is_same_v<T, MGPRModel>) return mgpr_body(m);
        else return gpfr_body(m);
      },
      model);
  const Fingerprint fp = fingerprint(model);
  return {{"format", kArchiveFormat},
          {"version", kArchiveVersion},
          {"kind", model_kind(model)},
          {"theta", theta_json(model)},
          {"model", body},
          {"fingerprint", {{"rows", fp.rows}, {"hash", fp.hash}}},
          {"metadata", metadata.is_null() ? json::object() : metadata}};
}

AnyModel archive_model(const json& a) {
  require(a.is_object() && a.value("format", "") == kArchiveFormat, "archive: not a fungp archive");
  require(a.value("version", -1) == kArchiveVersion,
          "archive: unsupported version " + a.value("version", json()).dump());
  const auto kind = field<std::string>(a, "kind", "archive");
  const json& body = node(a, "model", "archive");
  AnyModel model;
  try {
    if (kind == "gpr") model = gp_from(body);
    else if (kind == "nsgpr") model = ns_from(body);
    else if (kind == "mgpr") model = mgpr_from(body);
    else if (kind == "gpfr") model = gpfr_from(body);
    else throw ValidationError("archive: unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("archive: malformed model (") + e.what() + ")");
  }
  const json& fp = node(a, "fingerprint", "archive");
  const Fingerprint check = fingerprint(model);
  require(field<Index>(fp, "rows", "fingerprint") == check.rows &&
              field<std::string>(fp, "hash", "fingerprint") == check.hash,
          "archive: training-data fingerprint mismatch");
  return model;
}

void save_archive(const std::string& path, const AnyModel& model, const json& metadata) {
  write_json_file(path, archive_json(model, metadata));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  require(out.good(), "failed writing '" + path + "'");
}

}  // namespace fungp
