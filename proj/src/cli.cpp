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

#include "fungp/cli.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>
#include <set>

#include "fungp/archive.hpp"
#include "fungp/io.hpp"
#include "fungp/seeds.hpp"
#include "fungp/simulate.hpp"

namespace fungp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Strict view of one object in the config: unknown keys and wrong types are
// validation errors naming the dotted key.
class Block {
 public:
  Block(const json* j, std::string path, std::set<std::string> allowed)
      : j_(j && !j->is_null() ? j : nullptr), path_(std::move(path)) {
    if (!j_) return;
    require(j_->is_object(), "config: '" + path_ + "' must be an object");
    for (const auto& [key, value] : j_->items())
      require(allowed.count(key) > 0, "config: unknown key '" + name(key) + "'");
  }

  bool present() const { return j_ != nullptr; }
  bool has(const std::string& k) const { return j_ && j_->contains(k); }
  const json* child(const std::string& k) const { return has(k) ? &j_->at(k) : nullptr; }
  std::string name(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  std::string str(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    require(at(k).is_string(), "config: '" + name(k) + "' must be a string");
    return at(k).get<std::string>();
  }
  double num(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    return number(at(k), name(k));
  }
  long long integer(const std::string& k, long long fallback) const {
    if (!has(k)) return fallback;
    require(at(k).is_number_integer(), "config: '" + name(k) + "' must be an integer");
    return at(k).get<long long>();
  }
  bool flag(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    require(at(k).is_boolean(), "config: '" + name(k) + "' must be true or false");
    return at(k).get<bool>();
  }
  std::vector<std::string> strings(const std::string& k, std::vector<std::string> fallback) const {
    if (!has(k)) return fallback;
    const json& a = at(k);
    require(a.is_array(), "config: '" + name(k) + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : a) {
      require(e.is_string(), "config: '" + name(k) + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  Vector numbers(const std::string& k) const {
    const json& a = at(k);
    require(a.is_array(), "config: '" + name(k) + "' must be an array of numbers");
    Vector v(static_cast<Index>(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = number(a[i], name(k));
    return v;
  }
  const json& at(const std::string& k) const { return j_->at(k); }

  // Numbers, or the strings "-inf"/"inf" for log-scale values at the boundary.
  static double number(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("config: '" + key + "' must be a number");
  }

 private:
  const json* j_;
  std::string path_;
};

Index positive(long long v, const std::string& key, long long min = 1) {
  require(v >= min, "config: '" + key + "' must be at least " + std::to_string(min));
  return static_cast<Index>(v);
}

struct Layout {
  std::vector<std::string> inputs{"t"};
  std::vector<std::string> responses;  // empty: every remaining column
  std::string output = "output";
  std::string response = "y";
  GPFRLayout curves;
};

Layout overlay_layout(Layout base, const json* j) {
  Block b(j, "layout",
          {"inputs", "responses", "output", "response", "curve", "time", "scalars", "mean_functional",
           "gp_functional"});
  base.inputs = b.strings("inputs", base.inputs);
  base.responses = b.strings("responses", base.responses);
  base.output = b.str("output", base.output);
  base.response = b.str("response", base.response);
  base.curves.curve = b.str("curve", base.curves.curve);
  base.curves.time = b.str("time", base.curves.time);
  base.curves.response = base.response;
  base.curves.scalars = b.strings("scalars", base.curves.scalars);
  base.curves.mean_functional = b.strings("mean_functional", base.curves.mean_functional);
  base.curves.gp_functional = b.strings("gp_functional", base.curves.gp_functional);
  require(!base.inputs.empty(), "config: 'layout.inputs' must name at least one column");
  return base;
}

json layout_json(const Layout& l) {
  return {{"inputs", l.inputs},
          {"responses", l.responses},
          {"output", l.output},
          {"response", l.response},
          {"curve", l.curves.curve},
          {"time", l.curves.time},
          {"scalars", l.curves.scalars},
          {"mean_functional", l.curves.mean_functional},
          {"gp_functional", l.curves.gp_functional}};
}

std::vector<std::string> remaining_columns(const CsvTable& t, const std::vector<std::string>& skip) {
  std::vector<std::string> out;
  for (const auto& h : t.header)
    if (std::find(skip.begin(), skip.end(), h) == skip.end()) out.push_back(h);
  return out;
}

// Parsed, validated config.
struct Config {
  std::string command;
  std::string model;
  std::uint64_t seed = 0;
  // paths
  std::vector<std::string> data;
  std::string inputs_file, archive, new_data, observations;
  const json* layout = nullptr;
  KernelSpec kernel;
  // fit
  std::optional<Index> subset_size;
  std::optional<int> restarts;
  MeanKind mean = MeanKind::Zero;
  bool use_gradient = true;
  int max_iterations = 500;
  // nsgpr
  NSCorrelation corr;
  std::vector<int> which_tau;
  int nbasis = 5;
  std::vector<bool> cyclic;
  NSFlags flags;
  // gpfr
  FROptions fr;
  bool gp_time = false;
  bool fitting = true;
  std::optional<Vector> fixed_theta;
  // predict
  bool noise_free = false;
  std::optional<Index> regressors;
  Index realization = 1;
  bool mean_only = false;
  // simulate
  const json* simulate = nullptr;
};

KernelSpec parse_kernel(const json* j) {
  Block b(j, "kernel", {"terms", "gamma", "nu"});
  KernelSpec s;
  s.terms.clear();
  for (const auto& t : b.strings("terms", {"pow.ex"})) {
    try {
      s.terms.push_back(parse_family(t));
    } catch (const ValidationError&) {
      throw ValidationError("config: unknown kernel family '" + t + "' in 'kernel.terms'");
    }
  }
  s.gamma = b.num("gamma", 2.0);
  s.nu = b.num("nu", 1.5);
  return s;
}

SmoothSpec parse_smooth(const json* j, const std::string& path) {
  Block b(j, path, {"nbasis", "norder", "basis", "pen", "lambda"});
  SmoothSpec s;
  if (b.has("nbasis")) s.nbasis = positive(b.integer("nbasis", 0), b.name("nbasis"));
  s.norder = static_cast<int>(positive(b.integer("norder", s.norder), b.name("norder")));
  const auto basis = b.str("basis", "bspline");
  require(basis == "bspline" || basis == "fourier",
          "config: '" + b.name("basis") + "' must be 'bspline' or 'fourier'");
  s.bspline = basis == "bspline";
  if (b.has("pen")) s.pen = b.numbers("pen");
  s.lambda = b.num("lambda", s.lambda);
  s.validate();
  return s;
}

const std::set<std::string> kCommands{"simulate", "fit", "predict", "export-plot-data"};
const std::set<std::string> kModels{"gpr", "nsgpr", "mgpr", "gpfr"};

Config parse_config(const json& raw, const RunOptions& options) {
  Config c;
  Block top(&raw, "",
            {"command", "model", "seed", "paths", "layout", "kernel", "fit", "nsgpr", "gpfr", "predict",
             "simulate"});
  require(top.present(), "config: expected a JSON object");
  require(top.has("command"), "config: missing 'command'");
  require(top.has("model"), "config: missing 'model'");
  c.command = top.str("command", "");
  c.model = top.str("model", "");
  require(kCommands.count(c.command) > 0,
          "config: 'command' must be simulate, fit, predict or export-plot-data");
  require(kModels.count(c.model) > 0, "config: 'model' must be gpr, nsgpr, mgpr or gpfr");
  const long long seed = top.integer("seed", 0);
  require(seed >= 0, "config: 'seed' must be non-negative");
  c.seed = options.seed ? *options.seed : static_cast<std::uint64_t>(seed);

  auto only_for = [&](const char* block, std::set<std::string> models) {
    require(!top.has(block) || models.count(c.model) > 0,
            std::string("config: block '") + block + "' does not apply to model '" + c.model + "'");
  };
  only_for("kernel", {"gpr", "gpfr"});
  only_for("nsgpr", {"nsgpr"});
  only_for("gpfr", {"gpfr"});

  Block paths(top.child("paths"), "paths", {"data", "inputs", "archive", "new_data", "observations"});
  if (paths.has("data")) {
    const json& d = paths.at("data");
    if (d.is_array() && c.model == "mgpr") {
      c.data = paths.strings("data", {});
      require(!c.data.empty(), "config: 'paths.data' lists no files");
    } else {
      c.data = {paths.str("data", "")};
    }
  }
  c.inputs_file = paths.str("inputs", "");
  c.archive = paths.str("archive", "");
  c.new_data = paths.str("new_data", "");
  c.observations = paths.str("observations", "");
  c.layout = top.child("layout");
  overlay_layout({}, c.layout);  // key check

  if (c.model == "gpr" || c.model == "gpfr") {
    if ((c.command == "fit" || (c.command == "simulate" && c.model == "gpr")))
      require(top.has("kernel"), "config: model '" + c.model + "' needs a 'kernel' block to " + c.command);
    c.kernel = parse_kernel(top.child("kernel"));
  }

  Block fit(top.child("fit"), "fit", {"subset_size", "restarts", "mean", "use_gradient", "max_iterations"});
  if (fit.has("subset_size")) c.subset_size = positive(fit.integer("subset_size", 0), "fit.subset_size");
  if (fit.has("restarts"))
    c.restarts = static_cast<int>(positive(fit.integer("restarts", 0), "fit.restarts"));
  try {
    c.mean = parse_mean_kind(fit.str("mean", "zero"));
  } catch (const ValidationError&) {
    throw ValidationError("config: 'fit.mean' must be zero, constant, linear or average");
  }
  require(c.mean != MeanKind::Explicit, "config: 'fit.mean' explicit values are not available from files");
  c.use_gradient = fit.flag("use_gradient", true);
  c.max_iterations = static_cast<int>(positive(fit.integer("max_iterations", 500), "fit.max_iterations"));

  Block ns(top.child("nsgpr"), "nsgpr",
           {"correlation", "gamma", "nu", "which_tau", "nbasis", "cyclic", "unit_signal_variance",
            "zero_noise_variance", "sep_cov"});
  {
    const auto family = ns.str("correlation", "pow.ex");
    require(family == "pow.ex" || family == "matern",
            "config: 'nsgpr.correlation' must be 'pow.ex' or 'matern'");
    c.corr.family = parse_family(family);
    c.corr.gamma = ns.num("gamma", 2.0);
    c.corr.nu = ns.num("nu", 1.5);
    c.corr.validate();
    if (ns.has("which_tau")) {
      const Vector w = ns.numbers("which_tau");
      for (Index i = 0; i < w.size(); ++i) {
        require(w(i) == std::floor(w(i)) && w(i) >= 1, "config: 'nsgpr.which_tau' holds 1-based coordinates");
        c.which_tau.push_back(static_cast<int>(w(i)) - 1);
      }
    }
    c.nbasis = static_cast<int>(positive(ns.integer("nbasis", 5), "nsgpr.nbasis", 4));
    if (ns.has("cyclic")) {
      const json& a = ns.at("cyclic");
      require(a.is_array(), "config: 'nsgpr.cyclic' must be an array of booleans");
      for (const auto& e : a) {
        require(e.is_boolean(), "config: 'nsgpr.cyclic' must be an array of booleans");
        c.cyclic.push_back(e.get<bool>());
      }
    }
    c.flags.unit_signal_variance = ns.flag("unit_signal_variance", false);
    c.flags.zero_noise_variance = ns.flag("zero_noise_variance", false);
    c.flags.sep_cov = ns.flag("sep_cov", false);
  }

  Block gp(top.child("gpfr"), "gpfr", {"response", "coefficient", "concurrent", "gp_time", "fitting", "theta"});
  c.fr.response = parse_smooth(gp.child("response"), "gpfr.response");
  c.fr.coefficient = parse_smooth(gp.child("coefficient"), "gpfr.coefficient");
  c.fr.concurrent = gp.flag("concurrent", true);
  c.gp_time = gp.flag("gp_time", false);
  c.fitting = gp.flag("fitting", true);
  if (gp.has("theta")) c.fixed_theta = gp.numbers("theta");

  Block pr(top.child("predict"), "predict", {"noise_free", "subset_regressors", "realization", "mean_only"});
  c.noise_free = pr.flag("noise_free", false);
  if (pr.has("subset_regressors"))
    c.regressors = positive(pr.integer("subset_regressors", 0), "predict.subset_regressors");
  c.realization = positive(pr.integer("realization", 1), "predict.realization");
  c.mean_only = pr.flag("mean_only", false);
  require(!c.mean_only || c.model == "gpfr", "config: 'predict.mean_only' applies to gpfr only");
  require(!c.regressors || c.model == "gpr", "config: 'predict.subset_regressors' applies to gpr only");

  c.simulate = top.child("simulate");
  if (c.command == "simulate") require(c.simulate != nullptr, "config: 'simulate' block required");
  if (c.command == "fit") require(!c.data.empty(), "config: 'paths.data' required to fit");
  if (c.command == "predict") {
    require(!c.archive.empty(), "config: 'paths.archive' required to predict");
    require(!c.new_data.empty(), "config: 'paths.new_data' required to predict");
  }
  if (c.command == "export-plot-data")
    require(!c.archive.empty(), "config: 'paths.archive' required to export plot data");
  require(c.observations.empty() || c.model == "mgpr" || c.model == "gpfr",
          "config: 'paths.observations' applies to mgpr and gpfr only");
  return c;
}

std::string out_path(const RunOptions& o, const std::string& file) {
  return (fs::path(o.output_dir) / file).string();
}

std::string bool_cell(bool b) { return b ? "true" : "false"; }

void emit_warnings(const PredictionResult& r) {
  for (const auto& w : r.warnings) std::cerr << json({{"warning", w}}).dump() << '\n';
}

Matrix grid_or_file(const Config& c, const Block& sim, const Layout& layout) {
  if (!c.inputs_file.empty()) return read_csv(c.inputs_file).columns(layout.inputs);
  require(layout.inputs.size() == 1,
          "config: a regular grid is one-dimensional; give 'paths.inputs' for more inputs");
  Block grid(sim.child("grid"), "simulate.grid", {"lo", "hi", "n"});
  const double lo = grid.num("lo", 0.0), hi = grid.num("hi", 1.0);
  require(hi > lo, "config: 'simulate.grid.hi' must exceed 'lo'");
  const Index n = positive(grid.integer("n", 50), "simulate.grid.n", 2);
  return Vector::LinSpaced(n, lo, hi);
}

Vector linear_mean(const Block& sim, const Matrix& x) {
  if (!sim.has("mean")) return Vector();
  const Vector b = sim.numbers("mean");
  require(b.size() == 1 || b.size() == x.cols() + 1,
          "config: 'simulate.mean' holds {b0} or {b0, b1..bQ}");
  Vector mu = Vector::Constant(x.rows(), b(0));
  if (b.size() > 1) mu += x * b.tail(x.cols());
  return mu;
}

std::vector<std::string> response_names(const Layout& l, Index m) {
  if (!l.responses.empty()) {
    require(static_cast<Index>(l.responses.size()) == m,
            "config: 'layout.responses' must name one column per realization");
    return l.responses;
  }
  std::vector<std::string> out;
  for (Index i = 0; i < m; ++i) out.push_back("y" + std::to_string(i + 1));
  return out;
}

void write_grid_table(const std::string& path, const std::vector<std::string>& lead,
                      const std::vector<std::string>& inputs, const Matrix& x, const Matrix& values,
                      const std::vector<std::string>& value_names,
                      const std::vector<std::vector<std::string>>& lead_cells = {}) {
  std::vector<std::string> header = lead;
  header.insert(header.end(), inputs.begin(), inputs.end());
  header.insert(header.end(), value_names.begin(), value_names.end());
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<std::string> row = lead_cells.empty() ? std::vector<std::string>{} : lead_cells[static_cast<size_t>(i)];
    for (Index q = 0; q < x.cols(); ++q) row.push_back(format_number(x(i, q)));
    for (Index k = 0; k < values.cols(); ++k) row.push_back(format_number(values(i, k)));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

json kernel_summary(const KernelSpec& s, const Vector& theta) {
  json terms = json::array();
  for (auto f : s.terms) terms.push_back(std::string(family_name(f)));
  json log = json::array(), natural = json::array();
  for (Index i = 0; i < theta.size(); ++i) {
    log.push_back(to_json_number(theta(i)));
    natural.push_back(to_json_number(std::exp(theta(i))));
  }
  return {{"terms", terms}, {"gamma", s.gamma}, {"nu", s.nu}, {"input_dim", s.input_dim},
          {"theta", {{"names", param_names(s)}, {"log", log}, {"natural", natural}}}};
}

VaryingCoeffs simulation_coeffs(const Config& c, const Block& sim, const Matrix& x) {
  const Index q = x.cols();
  std::vector<int> which = c.which_tau;
  if (which.empty())
    for (int i = 0; i < q; ++i) which.push_back(i);
  const auto d = static_cast<Index>(which.size());
  std::vector<bool> cyclic = c.cyclic.empty() ? std::vector<bool>(static_cast<size_t>(d), false) : c.cyclic;
  Vector lo(d), hi(d);
  for (Index j = 0; j < d; ++j) {
    require(which[static_cast<size_t>(j)] < q, "config: 'nsgpr.which_tau' coordinate out of range");
    lo(j) = x.col(which[static_cast<size_t>(j)]).minCoeff();
    hi(j) = x.col(which[static_cast<size_t>(j)]).maxCoeff();
  }
  const Index angles = q * (q - 1) / 2;
  VaryingCoeffs v = VaryingCoeffs::constant(q, which, c.nbasis, lo, hi, cyclic, 0.0, Vector::Zero(q),
                                            Vector::Zero(angles), 0.0);
  v.flags = c.flags;
  Block co(sim.child("coefficients"), "simulate.coefficients", {"log_sigma", "log_radius", "angle", "noise_log_var"});
  require(co.present(), "config: 'simulate.coefficients' required for nsgpr");
  const Index k = v.surface_size();
  auto surface = [&](const json& e, const std::string& key) -> Vector {
    if (e.is_number()) return Vector::Constant(k, e.get<double>());
    require(e.is_array() && static_cast<Index>(e.size()) == k,
            "config: '" + key + "' needs a number or " + std::to_string(k) + " spline coefficients");
    Vector s(k);
    for (Index i = 0; i < k; ++i) s(i) = Block::number(e[static_cast<size_t>(i)], key);
    return s;
  };
  auto surfaces = [&](const std::string& key, Matrix& target) {
    if (!co.has(key)) return;
    const json& a = co.at(key);
    require(a.is_array() && static_cast<Index>(a.size()) == target.cols(),
            "config: '" + co.name(key) + "' needs " + std::to_string(target.cols()) + " surfaces");
    for (Index i = 0; i < target.cols(); ++i) target.col(i) = surface(a[static_cast<size_t>(i)], co.name(key));
  };
  if (co.has("log_sigma")) v.log_sigma = surface(co.at("log_sigma"), co.name("log_sigma"));
  surfaces("log_radius", v.log_radius);
  surfaces("angle", v.angle);
  v.noise_log_var = co.num("noise_log_var", std::log(0.01));
  if (c.flags.unit_signal_variance) v.log_sigma.setZero();
  if (c.flags.sep_cov) v.angle.setZero();
  if (c.flags.zero_noise_variance) v.noise_log_var = -std::numeric_limits<double>::infinity();
  v.validate();
  return v;
}

void cmd_simulate(const Config& c, const RunOptions& o) {
  const Layout layout = overlay_layout({}, c.layout);
  const std::uint64_t sim_seed = seeds::derive(c.seed, seeds::kSimulation);
  json params = {{"model", c.model}, {"seed", c.seed}};
  if (c.model == "gpr" || c.model == "nsgpr") {
    Block sim(c.simulate, "simulate", {"grid", "realizations", "theta", "mean", "coefficients"});
    const Matrix x = grid_or_file(c, sim, layout);
    const Index m = positive(sim.integer("realizations", 1), "simulate.realizations");
    const Vector mu = linear_mean(sim, x);
    Matrix latent, y;
    if (c.model == "gpr") {
      require(!sim.has("coefficients"), "config: 'simulate.coefficients' applies to nsgpr only");
      require(sim.has("theta"), "config: 'simulate.theta' (log scale) required for gpr");
      KernelSpec spec = c.kernel;
      spec.input_dim = static_cast<int>(x.cols());
      spec.validate();
      HyperParams hp{sim.numbers("theta")};
      require(hp.values.size() == param_count(spec),
              "config: 'simulate.theta' needs " + std::to_string(param_count(spec)) + " log-scale values");
      const GPSample s = simulate_gp(spec, hp, x, m, mu, sim_seed);
      latent = s.latent;
      y = s.responses;
      params["kernel"] = kernel_summary(spec, hp.values);
    } else {
      require(!sim.has("theta"), "config: 'simulate.theta' applies to gpr and mgpr only");
      const VaryingCoeffs v = simulation_coeffs(c, sim, x);
      std::mt19937_64 rng(sim_seed);
      latent = sample_mvn(ns_cov_matrix(c.corr, v, x, x, false), m, rng);
      if (mu.size() > 0) latent.colwise() += mu;
      y = latent;
      const double sd = std::sqrt(std::exp(v.noise_log_var));
      std::normal_distribution<double> z;
      for (Index r = 0; r < m; ++r)
        for (Index i = 0; i < x.rows(); ++i) y(i, r) += sd * z(rng);
      params.update(ns_coefficients_json(c.corr, v));
    }
    if (mu.size() > 0) params["mean"] = to_json_vector(sim.numbers("mean"));
    const auto names = response_names(layout, m);
    write_grid_table(out_path(o, "data.csv"), {}, layout.inputs, x, y, names);
    write_grid_table(out_path(o, "latent.csv"), {}, layout.inputs, x, latent, names);
  } else if (c.model == "mgpr") {
    Block sim(c.simulate, "simulate", {"example", "realizations", "points", "grid", "theta", "mean", "outputs"});
    MGPRSample s;
    if (sim.flag("example", false)) {
      for (const char* k : {"theta", "mean", "grid", "outputs"})
        require(!sim.has(k), std::string("config: 'simulate.") + k + "' conflicts with 'example'");
      s = simulate_mgpr_example(sim_seed, positive(sim.integer("realizations", 30), "simulate.realizations"),
                                positive(sim.integer("points", 250), "simulate.points", 2));
    } else {
      require(sim.has("theta"), "config: 'simulate.theta' (log scale) or 'example' required for mgpr");
      const Matrix x = grid_or_file(c, sim, layout);
      MGPRHyper hp;
      hp.input_dim = x.cols();
      hp.values = sim.numbers("theta");
      const Index block = 3 + 2 * x.cols();
      require(hp.values.size() % block == 0 && hp.values.size() > 0,
              "config: 'simulate.theta' needs " + std::to_string(block) + " values per output");
      hp.outputs = hp.values.size() / block;
      std::vector<Vector> means;
      if (sim.has("mean")) {
        const json& a = sim.at("mean");
        require(a.is_array() && static_cast<Index>(a.size()) == hp.outputs,
                "config: 'simulate.mean' needs one coefficient array per output");
        for (Index j = 0; j < hp.outputs; ++j) {
          json wrap = {{"mean", a[static_cast<size_t>(j)]}};
          means.push_back(linear_mean(Block(&wrap, "simulate", {"mean"}), x));
        }
      }
      s = simulate_mgpr(hp, std::vector<Matrix>(static_cast<size_t>(hp.outputs), x),
                        positive(sim.integer("realizations", 1), "simulate.realizations"), means, sim_seed);
      if (sim.has("mean")) params["mean"] = sim.at("mean");
    }
    const MGPRHyper& hp = s.truth;
    json log = json::array(), natural = json::array();
    for (Index i = 0; i < hp.values.size(); ++i) {
      log.push_back(to_json_number(hp.values(i)));
      natural.push_back(to_json_number(std::exp(hp.values(i))));
    }
    params["outputs"] = hp.outputs;
    params["theta"] = {{"names", hp.names()}, {"log", log}, {"natural", natural}};
    if (!s.mean_coefficients.empty()) {
      json mc = json::array();
      for (const auto& b : s.mean_coefficients) mc.push_back(to_json_vector(b));
      params["mean"] = mc;
    }
    require(static_cast<Index>(layout.inputs.size()) == hp.input_dim,
            "config: 'layout.inputs' must name one column per input dimension");
    const auto names = response_names(layout, s.data.realizations());
    std::vector<std::string> header{layout.output};
    header.insert(header.end(), layout.inputs.begin(), layout.inputs.end());
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<std::string>> data_rows, latent_rows;
    for (Index j = 0; j < hp.outputs; ++j) {
      const auto sj = static_cast<size_t>(j);
      const Matrix& x = s.data.inputs[sj];
      for (Index i = 0; i < x.rows(); ++i) {
        std::vector<std::string> lead{std::to_string(j + 1)};
        for (Index q = 0; q < x.cols(); ++q) lead.push_back(format_number(x(i, q)));
        auto d = lead, l = lead;
        for (Index r = 0; r < s.data.realizations(); ++r) {
          d.push_back(format_number(s.data.responses[sj](i, r)));
          l.push_back(format_number(s.latent[sj](i, r)));
        }
        data_rows.push_back(std::move(d));
        latent_rows.push_back(std::move(l));
      }
    }
    write_csv(out_path(o, "data.csv"), header, data_rows);
    write_csv(out_path(o, "latent.csv"), header, latent_rows);
  } else {
    Block sim(c.simulate, "simulate", {"curves", "points", "new_points", "include_gp"});
    const GPFRExample ex = simulate_gpfr_example(
        sim_seed, positive(sim.integer("curves", 20), "simulate.curves", 2),
        positive(sim.integer("points", 50), "simulate.points", 2),
        positive(sim.integer("new_points", 60), "simulate.new_points", 2), sim.flag("include_gp", true));
    const GPFRLayout& l = layout.curves;
    const std::vector<std::string> scalars =
        l.scalars.size() == 2 ? l.scalars : std::vector<std::string>{"u1", "u2"};
    const std::string x_name = l.gp_functional.size() == 1 ? l.gp_functional[0] : "x";
    std::vector<std::vector<std::string>> data_rows, latent_rows, new_rows;
    for (Index m = 0; m < ex.train.curves(); ++m) {
      const auto s = static_cast<size_t>(m);
      for (Index i = 0; i < ex.train.t[s].size(); ++i) {
        const std::string id = std::to_string(m + 1), t = format_number(ex.train.t[s](i));
        data_rows.push_back({id, t, format_number(ex.train.y[s](i)), format_number(ex.train.u(m, 0)),
                             format_number(ex.train.u(m, 1)), format_number(ex.train.x[0][s](i))});
        latent_rows.push_back({id, t, format_number(ex.train_latent[s](i))});
      }
    }
    for (Index i = 0; i < ex.t_new.size(); ++i)
      new_rows.push_back({format_number(ex.t_new(i)), format_number(ex.y_new(i)), format_number(ex.u_new(0)),
                          format_number(ex.u_new(1)), format_number(ex.x_new(i)), format_number(ex.latent_new(i))});
    write_csv(out_path(o, "data.csv"), {l.curve, l.time, l.response, scalars[0], scalars[1], x_name}, data_rows);
    write_csv(out_path(o, "latent.csv"), {l.curve, l.time, "latent"}, latent_rows);
    write_csv(out_path(o, "new_curve.csv"),
              {l.time, l.response, scalars[0], scalars[1], x_name, "latent"}, new_rows);
    params["kernel"] = kernel_summary(ex.kernel, ex.truth.values);
    params["beta"] = {"1", "sin((t/2)^3)"};
    params["curves"] = ex.train.curves();
  }
  params["simulation_seed"] = sim_seed;
  write_json_file(out_path(o, "parameters.json"), params);
}

OptimizerOptions optimizer_options(const Config& c) {
  OptimizerOptions opt;
  opt.max_iterations = c.max_iterations;
  return opt;
}

Dataset load_dataset(const Config& c, Layout& layout) {
  require(c.data.size() == 1, "config: 'paths.data' must be a single file for " + c.model);
  const CsvTable t = read_csv(c.data[0]);
  if (layout.responses.empty()) layout.responses = remaining_columns(t, layout.inputs);
  return ingest_dataset(t, layout.inputs, layout.responses);
}

MultiDataset load_multi(const Config& c, Layout& layout) {
  if (c.data.size() == 1) {
    const CsvTable t = read_csv(c.data[0]);
    if (layout.responses.empty()) {
      auto skip = layout.inputs;
      skip.push_back(layout.output);
      layout.responses = remaining_columns(t, skip);
    }
    return ingest_multi(t, layout.output, layout.inputs, layout.responses);
  }
  MultiDataset d;
  for (const auto& path : c.data) {
    const CsvTable t = read_csv(path);
    auto responses = layout.responses.empty() ? remaining_columns(t, layout.inputs) : layout.responses;
    const Dataset one = ingest_dataset(t, layout.inputs, responses);
    d.inputs.push_back(one.grid());
    d.responses.push_back(one.responses());
  }
  d.validate();
  return d;
}

void cmd_fit(const Config& c, const RunOptions& o) {
  Layout layout = overlay_layout({}, c.layout);
  const auto started = std::chrono::steady_clock::now();
  std::optional<AnyModel> model;
  FitReport report;
  if (c.model == "gpr") {
    const Dataset data = load_dataset(c, layout);
    KernelSpec spec = c.kernel;
    spec.input_dim = static_cast<int>(data.input_dim());
    spec.validate();
    FitOptions f;
    f.subset_size = c.subset_size;
    f.restarts = c.restarts.value_or(5);
    f.seed = c.seed;
    f.use_gradient = c.use_gradient;
    f.optimizer = optimizer_options(c);
    GPModel m = fit(data, spec, mean_fit(data, c.mean), f);
    report = m.report();
    model = std::move(m);
  } else if (c.model == "nsgpr") {
    Dataset data = load_dataset(c, layout);
    if (c.subset_size)
      data = subset_of_data(data, *c.subset_size, seeds::derive(c.seed, seeds::kSubsetOfData));
    NSFitOptions f;
    f.corr = c.corr;
    f.which_tau = c.which_tau;
    f.nbasis = c.nbasis;
    f.cyclic = c.cyclic;
    f.flags = c.flags;
    f.mean = c.mean;
    f.restarts = c.restarts.value_or(3);
    f.seed = c.seed;
    f.optimizer = optimizer_options(c);
    NSGPRModel m = nsgpr_fit(data, f);
    report = m.report();
    model = std::move(m);
  } else if (c.model == "mgpr") {
    const MultiDataset data = load_multi(c, layout);
    MGPRFitOptions f;
    f.subset_size = c.subset_size;
    f.mean = c.mean;
    f.restarts = c.restarts.value_or(5);
    f.seed = c.seed;
    f.use_gradient = c.use_gradient;
    f.optimizer = optimizer_options(c);
    MGPRModel m = mgpr_fit(data, f);
    report = m.report();
    model = std::move(m);
  } else {
    require(c.data.size() == 1, "config: 'paths.data' must be a single file for gpfr");
    const GPFRData data = ingest_gpfr(read_csv(c.data[0]), layout.curves);
    GPFROptions f;
    f.fr = c.fr;
    f.kernel = c.kernel;
    f.gp_time = c.gp_time;
    f.fit.subset_size = c.subset_size;
    f.fit.restarts = c.restarts.value_or(5);
    f.fit.seed = c.seed;
    f.fit.use_gradient = c.use_gradient;
    f.fit.optimizer = optimizer_options(c);
    if (c.fixed_theta) f.fixed = HyperParams{*c.fixed_theta};
    f.fitting = c.fitting;
    GPFRModel m = gpfr_fit(data, f);
    report = m.gp.report();
    model = std::move(m);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  save_archive(out_path(o, "model.json"), *model, {{"layout", layout_json(layout)}, {"seed", c.seed}});
  json rep = fit_report_json(report);
  rep["model"] = c.model;
  rep["seed"] = c.seed;
  rep["theta"] = theta_json(*model);
  write_json_file(out_path(o, "fit_report.json"), rep);
  write_json_file(out_path(o, "timing.json"), {{"runtime_seconds", seconds}});
}

Layout archived_layout(const json& archive, const json* overrides) {
  Layout base;
  const json meta = archive.value("metadata", json::object());
  if (meta.contains("layout")) base = overlay_layout(base, &meta.at("layout"));
  return overlay_layout(base, overrides);
}

const char* kind_error = "config: 'model' does not match the archive kind";

struct Band {
  std::string series, curve, output;
  Matrix x;
  Vector value, sd;  // sd empty: no band
};

std::vector<std::string> predict_header(const std::vector<std::string>& lead,
                                        const std::vector<std::string>& inputs) {
  std::vector<std::string> h = lead;
  h.insert(h.end(), inputs.begin(), inputs.end());
  for (const char* k : {"mean", "sd", "noiseFree"}) h.emplace_back(k);
  return h;
}

std::vector<std::string> prediction_row(std::vector<std::string> lead, const Matrix& x, Index i,
                                        const PredictionResult& r) {
  for (Index q = 0; q < x.cols(); ++q) lead.push_back(format_number(x(i, q)));
  lead.push_back(format_number(r.mean(i)));
  lead.push_back(format_number(r.sd(i)));
  lead.push_back(bool_cell(r.noise_free));
  return lead;
}

std::vector<OutputObservations> mgpr_conditioning(const Config& c, const MGPRModel& m, const Layout& l) {
  if (!c.observations.empty())
    return ingest_output_rows(read_csv(c.observations), l.output, l.inputs, l.response, m.hyper().outputs);
  require(c.realization <= m.train().realizations(), "config: 'predict.realization' exceeds the training realizations");
  return mgpr_training_observations(m, c.realization - 1);
}

GPFRPrediction gpfr_new_prediction(const Config& c, const GPFRModel& m, const Layout& l) {
  const CurveRows at = ingest_curve(read_csv(c.new_data), l.curves, false, true);
  const PredictionCovariates cov{at.u, at.fx, at.gpx};
  if (!c.observations.empty()) {
    require(!c.mean_only, "config: 'predict.mean_only' conflicts with 'paths.observations'");
    const CurveRows obs = ingest_curve(read_csv(c.observations), l.curves, true, false);
    return gpfr_predict_type1(m, NewCurve{obs.t, obs.y, obs.fx, obs.gpx}, at.t, cov, c.noise_free);
  }
  return gpfr_predict_type2(m, at.t, cov, c.noise_free, c.mean_only);
}

void cmd_predict(const Config& c, const RunOptions& o) {
  const json archive = read_json_file(c.archive);
  const AnyModel any = archive_model(archive);
  require(model_kind(any) == c.model, kind_error);
  const Layout l = archived_layout(archive, c.layout);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  if (const auto* m = std::get_if<GPModel>(&any)) {
    const Matrix x = read_csv(c.new_data).columns(l.inputs);
    require(c.realization <= m->train().realizations(), "config: 'predict.realization' exceeds the training realizations");
    PredictOptions p;
    p.noise_free = c.noise_free;
    p.regressor_size = c.regressors;
    p.seed = c.seed;
    p.realization = c.realization - 1;
    const PredictionResult r = predict(*m, x, p);
    emit_warnings(r);
    header = predict_header({}, l.inputs);
    for (Index i = 0; i < x.rows(); ++i) rows.push_back(prediction_row({}, x, i, r));
  } else if (const auto* m = std::get_if<NSGPRModel>(&any)) {
    const Matrix x = read_csv(c.new_data).columns(l.inputs);
    require(c.realization <= m->train().realizations(), "config: 'predict.realization' exceeds the training realizations");
    const PredictionResult r = nsgpr_predict(*m, x, c.noise_free, c.realization - 1);
    emit_warnings(r);
    header = predict_header({}, l.inputs);
    for (Index i = 0; i < x.rows(); ++i) rows.push_back(prediction_row({}, x, i, r));
  } else if (const auto* m = std::get_if<MGPRModel>(&any)) {
    const auto targets = ingest_output_rows(read_csv(c.new_data), l.output, l.inputs, "", m->hyper().outputs);
    std::vector<Matrix> tstar;
    for (const auto& t : targets) tstar.push_back(t.inputs);
    const auto results = mgpr_predict(*m, mgpr_conditioning(c, *m, l), tstar, c.noise_free);
    header = predict_header({l.output}, l.inputs);
    for (size_t j = 0; j < results.size(); ++j) {
      emit_warnings(results[j]);
      for (Index i = 0; i < tstar[j].rows(); ++i)
        rows.push_back(prediction_row({std::to_string(j + 1)}, tstar[j], i, results[j]));
    }
  } else {
    const auto& g = std::get<GPFRModel>(any);
    const GPFRPrediction p = gpfr_new_prediction(c, g, l);
    emit_warnings(p.result);
    header = predict_header({}, {l.curves.time});
    header.emplace_back("predictionType");
    const Matrix x = p.result.grid;
    for (Index i = 0; i < x.rows(); ++i) {
      auto row = prediction_row({}, x.leftCols(1), i, p.result);
      row.emplace_back(prediction_type_name(p.type));
      rows.push_back(std::move(row));
    }
  }
  write_csv(out_path(o, "predictions.csv"), header, rows);
}

constexpr double kBand = 1.959963984540054;

void add_rows(std::vector<std::vector<std::string>>& rows, const Band& b) {
  for (Index i = 0; i < b.x.rows(); ++i) {
    std::vector<std::string> row{b.series, b.curve, b.output};
    for (Index q = 0; q < b.x.cols(); ++q) row.push_back(format_number(b.x(i, q)));
    row.push_back(format_number(b.value(i)));
    if (b.sd.size() > 0) {
      row.push_back(format_number(b.value(i) - kBand * b.sd(i)));
      row.push_back(format_number(b.value(i) + kBand * b.sd(i)));
    } else {
      row.emplace_back();
      row.emplace_back();
    }
    rows.push_back(std::move(row));
  }
}

void cmd_export(const Config& c, const RunOptions& o) {
  const json archive = read_json_file(c.archive);
  const AnyModel any = archive_model(archive);
  require(model_kind(any) == c.model, kind_error);
  const Layout l = archived_layout(archive, c.layout);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> inputs = l.inputs;
  auto univariate = [&](const Dataset& train, auto&& predict_at) {
    for (Index m = 0; m < train.realizations(); ++m) {
      const std::string id = std::to_string(m + 1);
      add_rows(rows, {"observed", id, "", train.inputs(m), train.response(m), Vector()});
      const PredictionResult r = predict_at(train.inputs(m), m);
      add_rows(rows, {"fitted", id, "", train.inputs(m), r.mean, r.sd});
    }
    if (!c.new_data.empty()) {
      require(c.realization <= train.realizations(), "config: 'predict.realization' exceeds the training realizations");
      const Matrix x = read_csv(c.new_data).columns(l.inputs);
      const PredictionResult r = predict_at(x, c.realization - 1);
      add_rows(rows, {"prediction", std::to_string(c.realization), "", x, r.mean, r.sd});
    }
  };
  if (const auto* m = std::get_if<GPModel>(&any)) {
    univariate(m->train(), [&](const Matrix& x, Index r) {
      PredictOptions p;
      p.noise_free = c.noise_free;
      p.realization = r;
      return predict(*m, x, p);
    });
  } else if (const auto* m = std::get_if<NSGPRModel>(&any)) {
    univariate(m->train(), [&](const Matrix& x, Index r) { return nsgpr_predict(*m, x, c.noise_free, r); });
  } else if (const auto* m = std::get_if<MGPRModel>(&any)) {
    const MultiDataset& d = m->train();
    for (Index r = 0; r < d.realizations(); ++r) {
      const auto obs = mgpr_training_observations(*m, r);
      const auto fitted = mgpr_predict(*m, obs, d.inputs, c.noise_free);
      for (Index j = 0; j < d.outputs(); ++j) {
        const auto s = static_cast<size_t>(j);
        add_rows(rows, {"observed", std::to_string(r + 1), std::to_string(j + 1), d.inputs[s],
                        d.responses[s].col(r), Vector()});
        add_rows(rows, {"fitted", std::to_string(r + 1), std::to_string(j + 1), d.inputs[s], fitted[s].mean,
                        fitted[s].sd});
      }
    }
    if (!c.new_data.empty()) {
      const auto targets = ingest_output_rows(read_csv(c.new_data), l.output, l.inputs, "", m->hyper().outputs);
      std::vector<Matrix> tstar;
      for (const auto& t : targets) tstar.push_back(t.inputs);
      const auto res = mgpr_predict(*m, mgpr_conditioning(c, *m, l), tstar, c.noise_free);
      for (size_t j = 0; j < res.size(); ++j)
        add_rows(rows, {"prediction", c.observations.empty() ? std::to_string(c.realization) : "new",
                        std::to_string(j + 1), tstar[j], res[j].mean, res[j].sd});
    }
  } else {
    const auto& g = std::get<GPFRModel>(any);
    inputs = {l.curves.time};
    for (Index k = 0; k < g.train.curves(); ++k) {
      const auto s = static_cast<size_t>(k);
      const std::string id = std::to_string(k + 1);
      add_rows(rows, {"observed", id, "", g.train.t[s], g.train.y[s], Vector()});
      if (!g.fitted_mean.empty()) add_rows(rows, {"fitted", id, "", g.train.t[s], g.fitted_mean[s], g.fitted_sd[s]});
    }
    if (!c.new_data.empty()) {
      const GPFRPrediction p = gpfr_new_prediction(c, g, l);
      add_rows(rows, {std::string("prediction:") + prediction_type_name(p.type), "new", "",
                      p.result.grid.leftCols(1), p.result.mean, p.result.sd});
    }
  }
  std::vector<std::string> header{"series", "curve", "output"};
  header.insert(header.end(), inputs.begin(), inputs.end());
  for (const char* k : {"value", "lo", "hi"}) header.emplace_back(k);
  write_csv(out_path(o, "plot_data.csv"), header, rows);
}

int fail(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json({{"error", kind}, {"message", message}, {"exit_code", code}}).dump() << '\n';
  return code;
}

}  // namespace

void execute(const json& config, const RunOptions& options) {
  require(options.threads >= 1, "--threads must be at least 1");
  Eigen::setNbThreads(options.threads);
  const Config c = parse_config(config, options);
  std::error_code ec;
  fs::create_directories(options.output_dir, ec);
  require(fs::is_directory(options.output_dir), "cannot create output directory '" + options.output_dir + "'");
  if (c.command == "simulate") cmd_simulate(c, options);
  else if (c.command == "fit") cmd_fit(c, options);
  else if (c.command == "predict") cmd_predict(c, options);
  else cmd_export(c, options);
}

int run(const json& config, const RunOptions& options, std::ostream& err) {
  try {
    execute(config, options);
    return kSuccess;
  } catch (const ValidationError& e) {
    return fail(err, "validation", e.what(), kValidationFailure);
  } catch (const UnsupportedGradient& e) {
    return fail(err, "validation", e.what(), kValidationFailure);
  } catch (const json::exception& e) {
    return fail(err, "validation", e.what(), kValidationFailure);
  } catch (const NumericalError& e) {
    return fail(err, "numerical", e.what(), kNumericalFailure);
  } catch (const std::exception& e) {
    return fail(err, "internal", e.what(), kNumericalFailure);
  }
}

int run_file(const std::string& config_path, const RunOptions& options, std::ostream& err) {
  json config;
  try {
    config = read_json_file(config_path);
  } catch (const ValidationError& e) {
    return fail(err, "validation", e.what(), kValidationFailure);
  }
  return run(config, options, err);
}

}  // namespace fungp::cli
