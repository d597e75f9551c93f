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

#include "fungp/gpr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

#include "fungp/seeds.hpp"

namespace fungp {

// ---------------------------------------------------------------- Dataset

Dataset Dataset::shared(Matrix inputs, Matrix responses) {
  Dataset d;
  d.shared_ = true;
  d.grid_ = std::move(inputs);
  d.responses_ = std::move(responses);
  d.validate();
  return d;
}

Dataset Dataset::ragged(std::vector<Realization> realizations) {
  Dataset d;
  d.shared_ = false;
  d.ragged_ = std::move(realizations);
  d.validate();
  return d;
}

Index Dataset::realizations() const {
  return shared_ ? responses_.cols() : static_cast<Index>(ragged_.size());
}

Index Dataset::input_dim() const {
  if (shared_) return grid_.cols();
  return ragged_.empty() ? 0 : ragged_.front().inputs.cols();
}

Index Dataset::rows(Index m) const {
  return shared_ ? grid_.rows() : ragged_.at(static_cast<size_t>(m)).inputs.rows();
}

const Matrix& Dataset::inputs(Index m) const {
  return shared_ ? grid_ : ragged_.at(static_cast<size_t>(m)).inputs;
}

Vector Dataset::response(Index m) const {
  return shared_ ? Vector(responses_.col(m))
                 : ragged_.at(static_cast<size_t>(m)).response;
}

const Matrix& Dataset::grid() const {
  require(shared_, "dataset does not have a shared grid");
  return grid_;
}

const Matrix& Dataset::responses() const {
  require(shared_, "dataset does not have a shared grid");
  return responses_;
}

void Dataset::validate() const {
  if (shared_) {
    require(grid_.rows() >= 1 && grid_.cols() >= 1, "dataset: empty input grid");
    require(responses_.rows() == grid_.rows(),
            "dataset: response rows must equal input rows");
    require(responses_.cols() >= 1, "dataset: at least one realization required");
    require(grid_.allFinite() && responses_.allFinite(),
            "dataset: non-finite entries");
    return;
  }
  require(!ragged_.empty(), "dataset: at least one realization required");
  const Index q = ragged_.front().inputs.cols();
  for (const auto& r : ragged_) {
    require(r.inputs.cols() == q && q >= 1, "dataset: inconsistent input dimension");
    require(r.inputs.rows() == r.response.size() && r.inputs.rows() >= 1,
            "dataset: response length must equal input rows");
    require(r.inputs.allFinite() && r.response.allFinite(),
            "dataset: non-finite entries");
  }
}

// ---------------------------------------------------------------- mean

const char* mean_kind_name(MeanKind kind) {
  switch (kind) {
    case MeanKind::Zero:
      return "zero";
    case MeanKind::Constant:
      return "constant";
    case MeanKind::Linear:
      return "linear";
    case MeanKind::Average:
      return "average";
    case MeanKind::Explicit:
      return "explicit";
  }
  return "";
}

MeanKind parse_mean_kind(const std::string& name) {
  if (name == "zero") return MeanKind::Zero;
  if (name == "constant") return MeanKind::Constant;
  if (name == "linear" || name == "t") return MeanKind::Linear;
  if (name == "average" || name == "avg") return MeanKind::Average;
  if (name == "explicit") return MeanKind::Explicit;
  throw ValidationError("unknown mean model '" + name + "'");
}

MeanModel mean_fit(const Dataset& data, MeanKind kind,
                   const Vector* explicit_values) {
  MeanModel mean;
  mean.kind = kind;
  switch (kind) {
    case MeanKind::Zero:
      break;
    case MeanKind::Constant: {
      double sum = 0.0;
      Index count = 0;
      for (Index m = 0; m < data.realizations(); ++m) {
        sum += data.response(m).sum();
        count += data.rows(m);
      }
      mean.coefficients = Vector::Constant(1, sum / static_cast<double>(count));
      break;
    }
    case MeanKind::Linear: {
      const Index q = data.input_dim();
      Index total = 0;
      for (Index m = 0; m < data.realizations(); ++m) total += data.rows(m);
      Matrix design(total, q + 1);
      Vector y(total);
      Index at = 0;
      for (Index m = 0; m < data.realizations(); ++m) {
        const Index n = data.rows(m);
        design.block(at, 0, n, 1).setOnes();
        design.block(at, 1, n, q) = data.inputs(m);
        y.segment(at, n) = data.response(m);
        at += n;
      }
      Eigen::ColPivHouseholderQR<Matrix> qr(design);
      require(qr.rank() == q + 1, "linear mean: design matrix is rank deficient");
      mean.coefficients = qr.solve(y);
      break;
    }
    case MeanKind::Average: {
      require(data.shared_grid(),
              "average mean requires realizations observed on a shared grid");
      mean.grid = data.grid();
      mean.values = data.responses().rowwise().mean();
      break;
    }
    case MeanKind::Explicit: {
      require(explicit_values != nullptr, "explicit mean requires values");
      require(data.shared_grid(), "explicit mean requires a shared grid");
      require(explicit_values->size() == data.grid().rows(),
              "explicit mean length must equal the number of inputs");
      mean.grid = data.grid();
      mean.values = *explicit_values;
      break;
    }
  }
  return mean;
}

namespace {

// Lookup on the reference grid with 1-D linear interpolation as fallback.
Vector grid_lookup(const MeanModel& mean, const Matrix& t) {
  Vector out(t.rows());
  std::vector<Index> order;
  for (Index i = 0; i < t.rows(); ++i) {
    Index hit = -1;
    for (Index r = 0; r < mean.grid.rows(); ++r)
      if ((mean.grid.row(r).array() == t.row(i).array()).all()) {
        hit = r;
        break;
      }
    if (hit >= 0) {
      out(i) = mean.values(hit);
      continue;
    }
    require(mean.grid.cols() == 1,
            "mean values are only defined on the training grid for Q > 1");
    if (order.empty()) {
      order.resize(static_cast<size_t>(mean.grid.rows()));
      for (Index r = 0; r < mean.grid.rows(); ++r) order[static_cast<size_t>(r)] = r;
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return mean.grid(a, 0) < mean.grid(b, 0);
      });
    }
    const double x = t(i, 0);
    if (x <= mean.grid(order.front(), 0)) {
      out(i) = mean.values(order.front());
      continue;
    }
    if (x >= mean.grid(order.back(), 0)) {
      out(i) = mean.values(order.back());
      continue;
    }
    auto upper = std::upper_bound(order.begin(), order.end(), x, [&](double v, Index r) {
      return v < mean.grid(r, 0);
    });
    const Index hi = *upper;
    const Index lo = *(upper - 1);
    const double x0 = mean.grid(lo, 0);
    const double x1 = mean.grid(hi, 0);
    const double w = (x - x0) / (x1 - x0);
    out(i) = (1.0 - w) * mean.values(lo) + w * mean.values(hi);
  }
  return out;
}

}  // namespace

Vector mean_eval(const MeanModel& mean, const Matrix& t) {
  switch (mean.kind) {
    case MeanKind::Zero:
      return Vector::Zero(t.rows());
    case MeanKind::Constant:
      return Vector::Constant(t.rows(), mean.coefficients(0));
    case MeanKind::Linear:
      require(t.cols() + 1 == mean.coefficients.size(),
              "linear mean: input dimension mismatch");
      return (t * mean.coefficients.tail(t.cols())).array() + mean.coefficients(0);
    case MeanKind::Average:
    case MeanKind::Explicit:
      return grid_lookup(mean, t);
  }
  return Vector::Zero(t.rows());
}

// ---------------------------------------------------------------- likelihood

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Realizations grouped by grid: one group for a shared grid, one per curve
// otherwise. Responses are already centred.
struct Group {
  Matrix inputs;
  Matrix y;
};

std::vector<Group> centred_groups(const Dataset& data, const MeanModel& mean) {
  std::vector<Group> groups;
  if (data.shared_grid()) {
    Group g{data.grid(), data.responses()};
    g.y.colwise() -= mean_eval(mean, data.grid());
    groups.push_back(std::move(g));
    return groups;
  }
  for (Index m = 0; m < data.realizations(); ++m) {
    Group g{data.inputs(m), data.response(m)};
    g.y.col(0) -= mean_eval(mean, g.inputs);
    groups.push_back(std::move(g));
  }
  return groups;
}

struct Evaluation {
  double value = 0.0;
  Vector gradient;
  Vector hessian_diag;
};

Evaluation evaluate(const KernelSpec& spec, const HyperParams& hp,
                    const std::vector<Group>& groups, bool gradient,
                    bool hessian) {
  Evaluation ev;
  const Index np = param_count(spec);
  if (gradient) ev.gradient = Vector::Zero(np);
  if (hessian) ev.hessian_diag = Vector::Zero(np);
  for (const auto& g : groups) {
    const Index n = g.inputs.rows();
    const double k = static_cast<double>(g.y.cols());
    const Matrix psi = cov_matrix(spec, hp, g.inputs, g.inputs, true);
    const CovFactor factor(psi);
    const Matrix alpha = factor.solve(g.y);
    ev.value += -0.5 * k * factor.log_det() -
                0.5 * (g.y.array() * alpha.array()).sum() -
                0.5 * k * static_cast<double>(n) * kLog2Pi;
    if (!gradient && !hessian) continue;
    const auto d1 = cov_grad(spec, hp, g.inputs);
    const Matrix psi_inv = factor.inverse();
    const Matrix s = alpha * alpha.transpose();
    const Matrix w = s - k * psi_inv;
    for (Index j = 0; j < np; ++j) {
      const Matrix& d = d1[static_cast<size_t>(j)];
      if (gradient) ev.gradient(j) += 0.5 * (w.array() * d.array()).sum();
    }
    if (!hessian) continue;
    const auto d2 = cov_second_deriv(spec, hp, g.inputs);
    for (Index j = 0; j < np; ++j) {
      const Matrix& d = d1[static_cast<size_t>(j)];
      const Matrix a = d * psi_inv * d;
      const Matrix inner = d2[static_cast<size_t>(j)] - a;
      ev.hessian_diag(j) +=
          0.5 * ((w.array() * inner.array()).sum() - (s.array() * a.array()).sum());
    }
  }
  return ev;
}

void check_model_inputs(const KernelSpec& spec, const HyperParams& hp,
                        const Dataset& data) {
  spec.validate();
  validate_layout(spec, hp);
  data.validate();
  require(data.input_dim() == spec.input_dim,
          "dataset input dimension does not match the kernel input_dim");
}

}  // namespace

double log_marginal_likelihood(const KernelSpec& spec, const HyperParams& hp,
                               const Dataset& data, const MeanModel& mean) {
  check_model_inputs(spec, hp, data);
  return evaluate(spec, hp, centred_groups(data, mean), false, false).value;
}

Vector log_lik_gradient(const KernelSpec& spec, const HyperParams& hp,
                        const Dataset& data, const MeanModel& mean) {
  check_model_inputs(spec, hp, data);
  return evaluate(spec, hp, centred_groups(data, mean), true, false).gradient;
}

Vector log_lik_hessian_diag(const KernelSpec& spec, const HyperParams& hp,
                            const Dataset& data, const MeanModel& mean) {
  check_model_inputs(spec, hp, data);
  return evaluate(spec, hp, centred_groups(data, mean), false, true).hessian_diag;
}

// ---------------------------------------------------------------- model

GPModel::GPModel(KernelSpec spec, HyperParams hp, MeanModel mean, Dataset train,
                 FitReport report)
    : spec_(std::move(spec)),
      hp_(std::move(hp)),
      mean_(std::move(mean)),
      train_(std::move(train)),
      report_(std::move(report)) {
  check_model_inputs(spec_, hp_, train_);
  for (auto& g : centred_groups(train_, mean_)) {
    factors_.emplace_back(cov_matrix(spec_, hp_, g.inputs, g.inputs, true));
    if (train_.shared_grid())
      alpha_ = factors_.back().solve(g.y);
    else
      ragged_alpha_.push_back(factors_.back().solve(Vector(g.y.col(0))));
  }
}

const CovFactor& GPModel::factor(Index realization) const {
  return train_.shared_grid() ? factors_.front()
                              : factors_.at(static_cast<size_t>(realization));
}

Vector GPModel::alpha(Index realization) const {
  return train_.shared_grid() ? Vector(alpha_.col(realization))
                              : ragged_alpha_.at(static_cast<size_t>(realization));
}

// ---------------------------------------------------------------- sampling

std::vector<Index> sample_indices(Index n, Index m, std::uint64_t seed) {
  require(m >= 1 && m <= n, "subset size must lie in [1, n]");
  std::vector<Index> all(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
  if (m == n) return all;
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(pick(rng))]);
  }
  all.resize(static_cast<size_t>(m));
  std::sort(all.begin(), all.end());
  return all;
}

Dataset subset_of_data(const Dataset& data, Index m, std::uint64_t seed) {
  if (data.shared_grid()) {
    const Index n = data.grid().rows();
    require(m >= 2 && m <= n, "Subset of Data size must satisfy 2 <= m <= n");
    const auto idx = sample_indices(n, m, seed);
    Matrix inputs(m, data.grid().cols());
    Matrix responses(m, data.responses().cols());
    for (Index i = 0; i < m; ++i) {
      inputs.row(i) = data.grid().row(idx[static_cast<size_t>(i)]);
      responses.row(i) = data.responses().row(idx[static_cast<size_t>(i)]);
    }
    return Dataset::shared(std::move(inputs), std::move(responses));
  }
  std::vector<Realization> out;
  for (Index r = 0; r < data.realizations(); ++r) {
    const Index n = data.rows(r);
    const Index take = std::min(m, n);
    const auto idx = sample_indices(n, take, seed + static_cast<std::uint64_t>(r));
    Realization real{Matrix(take, data.input_dim()), Vector(take)};
    const Vector y = data.response(r);
    for (Index i = 0; i < take; ++i) {
      real.inputs.row(i) = data.inputs(r).row(idx[static_cast<size_t>(i)]);
      real.response(i) = y(idx[static_cast<size_t>(i)]);
    }
    out.push_back(std::move(real));
  }
  return Dataset::ragged(std::move(out));
}

// ---------------------------------------------------------------- fit

GPModel fit(const Dataset& data, const KernelSpec& spec, const MeanModel& mean,
            const FitOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  spec.validate();
  data.validate();
  require(data.input_dim() == spec.input_dim,
          "dataset input dimension does not match the kernel input_dim");
  require(options.restarts >= 1 || options.initial.has_value(),
          "at least one optimizer start is required");

  Dataset train = data;
  if (options.subset_size) {
    train = subset_of_data(data, *options.subset_size,
                           seeds::derive(options.seed, seeds::kSubsetOfData));
  }
  const auto groups = centred_groups(train, mean);

  double sum = 0.0, sq = 0.0;
  Index count = 0;
  for (const auto& g : groups) {
    sum += g.y.sum();
    sq += g.y.squaredNorm();
    count += g.y.size();
  }
  const double mean_y = sum / static_cast<double>(count);
  const double var_y = std::max(sq / static_cast<double>(count) - mean_y * mean_y, 0.0);

  const bool analytic = options.use_gradient && spec.analytic_gradient();
  const Index np = param_count(spec);
  auto negative_ll = [&](const Vector& theta) {
    return -evaluate(spec, HyperParams{theta}, groups, false, false).value;
  };
  Objective objective;
  if (analytic) {
    objective = [&](const Vector& theta, Vector* gradient) {
      auto ev = evaluate(spec, HyperParams{theta}, groups, gradient != nullptr, false);
      if (gradient) *gradient = -ev.gradient;
      return -ev.value;
    };
  } else {
    objective = with_central_differences(negative_ll, 1e-6);
  }

  std::vector<Vector> starts;
  if (options.initial) {
    validate_layout(spec, *options.initial);
    starts.push_back(options.initial->values);
  }
  std::mt19937_64 rng(seeds::derive(options.seed, seeds::kRestarts));
  std::uniform_real_distribution<double> uniform(-3.0, 2.0);
  for (int r = 0; r < options.restarts; ++r) {
    Vector x0(np);
    for (Index i = 0; i + 1 < np; ++i) x0(i) = uniform(rng);
    x0(np - 1) = std::log(std::max(0.1 * var_y, 1e-8));
    starts.push_back(std::move(x0));
  }

  FitReport report;
  report.analytic_gradient = analytic;
  double best = std::numeric_limits<double>::infinity();
  Vector best_x;
  for (const auto& x0 : starts) {
    RestartDiagnostics diag;
    diag.start = x0;
    double start_value = std::numeric_limits<double>::infinity();
    try {
      start_value = negative_ll(x0);
    } catch (const NumericalError&) {
    }
    OptimizerResult res;
    try {
      res = minimize_bfgs(objective, x0, options.optimizer);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      res.x = x0;
      res.value = std::numeric_limits<double>::infinity();
      res.message = e.what();
    }
    diag.end = res.x;
    diag.log_likelihood = -res.value;
    diag.gradient_norm = res.gradient_norm;
    diag.iterations = res.iterations;
    diag.message = res.message;
    // A failed line search at a numerically stationary point counts as
    // converged.
    diag.converged =
        std::isfinite(res.value) &&
        (res.converged || res.gradient_norm < 1e-3 * (1.0 + std::abs(res.value)));
    if (std::isfinite(res.value) && res.value < best) {
      best = res.value;
      best_x = res.x;
      report.initial_log_likelihood = -start_value;
      report.converged = diag.converged;
      report.gradient_norm = res.gradient_norm;
      report.iterations = res.iterations;
    }
    report.restarts.push_back(std::move(diag));
  }
  const bool any_converged =
      std::any_of(report.restarts.begin(), report.restarts.end(),
                  [](const RestartDiagnostics& d) { return d.converged; });
  if (!std::isfinite(best) || !any_converged) {
    std::string message = "GP fit failed on every restart:";
    for (size_t i = 0; i < report.restarts.size(); ++i)
      message += " [" + std::to_string(i) + ": " + report.restarts[i].message +
                 ", loglik " + std::to_string(report.restarts[i].log_likelihood) + "]";
    throw NumericalError(message);
  }
  report.log_likelihood = -best;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 started).count();
  return GPModel(spec, HyperParams{best_x}, mean, std::move(train), std::move(report));
}

// ---------------------------------------------------------------- predict

Conditional gp_condition(const KernelSpec& spec, const HyperParams& hp,
                         const Matrix& inputs, const CovFactor& factor,
                         const Vector& alpha, const Matrix& tstar,
                         bool noise_free) {
  const Matrix cross = cov_matrix(spec, hp, tstar, inputs, false);
  Conditional out;
  out.mean = cross * alpha;
  const Matrix v = factor.half_solve(cross.transpose());
  out.variance = cov_diagonal(spec, hp, tstar) - v.colwise().squaredNorm().transpose();
  out.variance = out.variance.cwiseMax(0.0);
  if (!noise_free) out.variance.array() += std::exp(hp.noise_log_var());
  return out;
}

Conditional gp_condition(const KernelSpec& spec, const HyperParams& hp,
                         const Matrix& inputs, const Vector& y,
                         const Matrix& tstar, bool noise_free) {
  require(inputs.rows() == y.size(), "conditioning inputs and values differ in length");
  if (inputs.rows() == 0) {
    Conditional prior{Vector::Zero(tstar.rows()), cov_diagonal(spec, hp, tstar)};
    if (!noise_free) prior.variance.array() += std::exp(hp.noise_log_var());
    return prior;
  }
  const CovFactor factor(cov_matrix(spec, hp, inputs, inputs, true));
  return gp_condition(spec, hp, inputs, factor, factor.solve(y), tstar, noise_free);
}

namespace {

// Subset of Regressors (projected-process variance) on regressor rows `idx`.
Conditional sor_condition(const KernelSpec& spec, const HyperParams& hp,
                          const Matrix& inputs, const Vector& y,
                          const std::vector<Index>& idx, const Matrix& tstar,
                          bool noise_free) {
  const Index m = static_cast<Index>(idx.size());
  Matrix xu(m, inputs.cols());
  for (Index i = 0; i < m; ++i) xu.row(i) = inputs.row(idx[static_cast<size_t>(i)]);
  const double noise = std::exp(hp.noise_log_var());
  const Matrix kuu = cov_matrix(spec, hp, xu, xu, false);
  const Matrix kuf = cov_matrix(spec, hp, xu, inputs, false);
  const Matrix ksu = cov_matrix(spec, hp, tstar, xu, false);
  // Kuu = L L', V = L^{-1} Kuf, B = noise I + V V'.
  const CovFactor kuu_factor(kuu);
  const Matrix v = kuu_factor.half_solve(kuf);
  Matrix b = v * v.transpose();
  b.diagonal().array() += noise;
  const CovFactor b_factor(b);
  const Matrix ws = kuu_factor.half_solve(ksu.transpose());  // L^{-1} Ku*
  Conditional out;
  out.mean = ws.transpose() * b_factor.solve(Vector(v * y));
  const Matrix r = b_factor.half_solve(ws);
  out.variance = cov_diagonal(spec, hp, tstar) -
                 ws.colwise().squaredNorm().transpose() +
                 noise * r.colwise().squaredNorm().transpose();
  out.clamped = (out.variance.array() < 0.0).count();
  out.variance = out.variance.cwiseMax(0.0);
  if (!noise_free) out.variance.array() += noise;
  return out;
}

}  // namespace

PredictionResult predict(const GPModel& model, const Matrix& tstar,
                         const PredictOptions& options) {
  const Dataset& train = model.train();
  require(options.realization >= 0 && options.realization < train.realizations(),
          "prediction realization index out of range");
  require(tstar.cols() == model.spec().input_dim,
          "prediction inputs do not match the model input dimension");
  require(tstar.allFinite(), "prediction inputs must be finite");
  const Matrix& inputs = train.inputs(options.realization);
  Conditional cond;
  if (options.regressor_size) {
    const Index n = inputs.rows();
    require(*options.regressor_size >= 1 && *options.regressor_size <= n,
            "Subset of Regressors size must satisfy 1 <= mSR <= n");
    const auto idx = sample_indices(
        n, *options.regressor_size,
        seeds::derive(options.seed, seeds::kSubsetOfRegressors));
    const Vector y = train.response(options.realization) - mean_eval(model.mean(), inputs);
    cond = sor_condition(model.spec(), model.hyper(), inputs, y, idx, tstar,
                         options.noise_free);
  } else {
    cond = gp_condition(model.spec(), model.hyper(), inputs,
                        model.factor(options.realization),
                        model.alpha(options.realization), tstar, options.noise_free);
  }
  PredictionResult out;
  out.grid = tstar;
  out.mean = mean_eval(model.mean(), tstar) + cond.mean;
  out.sd = cond.variance.cwiseSqrt();
  out.noise_free = options.noise_free;
  if (cond.clamped > 0)
    out.warnings.push_back(std::to_string(cond.clamped) +
                           " negative predictive variances clamped to zero");
  return out;
}

}  // namespace fungp
