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

#include "fungp/mgpr.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fungp/seeds.hpp"

namespace fungp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Convolution of two Gaussian smoothing kernels with log scales (li, lj) and
// diagonal log precisions (pi, pj), evaluated at all differences t1 - t2.
// Optionally returns derivatives with respect to li, pi_q (own side i).
struct ConvTerm {
  Matrix value;
  std::vector<Matrix> d_prec_i;  // per q
  std::vector<Matrix> d_prec_j;  // per q
};

ConvTerm convolve(double li, const Vector& pi, double lj, const Vector& pj, const Matrix& t1,
                  const Matrix& t2, bool derivatives) {
  const Index q = pi.size();
  const Vector ai = pi.array().exp(), aj = pj.array().exp();
  const Vector s = ai + aj;
  const Vector e = (ai.array() * aj.array() / s.array()).matrix();
  ConvTerm out;
  const double log_scale = li + lj + 0.5 * static_cast<double>(q) * kLog2Pi -
                           0.5 * s.array().log().sum();
  const double scale = std::exp(log_scale);  // 0 when a shared scale is -inf
  out.value.resize(t1.rows(), t2.rows());
  for (Index a = 0; a < t1.rows(); ++a)
    for (Index b = 0; b < t2.rows(); ++b) {
      double quad = 0.0;
      for (Index k = 0; k < q; ++k) {
        const double d = t1(a, k) - t2(b, k);
        quad += e(k) * d * d;
      }
      out.value(a, b) = scale * std::exp(-0.5 * quad);
    }
  if (!derivatives) return out;
  for (Index k = 0; k < q; ++k) {
    Matrix di(t1.rows(), t2.rows()), dj(t1.rows(), t2.rows());
    const double base_i = -0.5 * ai(k) / s(k), base_j = -0.5 * aj(k) / s(k);
    const double sq_i = 0.5 * ai(k) * aj(k) * aj(k) / (s(k) * s(k));
    const double sq_j = 0.5 * aj(k) * ai(k) * ai(k) / (s(k) * s(k));
    for (Index a = 0; a < t1.rows(); ++a)
      for (Index b = 0; b < t2.rows(); ++b) {
        const double d = t1(a, k) - t2(b, k);
        di(a, b) = out.value(a, b) * (base_i - sq_i * d * d);
        dj(a, b) = out.value(a, b) * (base_j - sq_j * d * d);
      }
    out.d_prec_i.push_back(std::move(di));
    out.d_prec_j.push_back(std::move(dj));
  }
  return out;
}

void check_index(const MGPRHyper& hp, Index i) {
  require(i >= 0 && i < hp.outputs, "output index out of range");
}

std::vector<Index> block_offsets(const std::vector<Matrix>& inputs) {
  std::vector<Index> off{0};
  for (const auto& t : inputs) off.push_back(off.back() + t.rows());
  return off;
}

Matrix centred_responses(const MultiDataset& data, const std::vector<MeanModel>& means) {
  require(static_cast<Index>(means.size()) == data.outputs(), "one mean model per output required");
  Matrix y(data.total_rows(), data.realizations());
  Index row = 0;
  for (Index j = 0; j < data.outputs(); ++j) {
    const auto s = static_cast<size_t>(j);
    Matrix block = data.responses[s];
    block.colwise() -= mean_eval(means[s], data.inputs[s]);
    y.middleRows(row, block.rows()) = block;
    row += block.rows();
  }
  return y;
}

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

Evaluation evaluate(const MGPRHyper& hp, const std::vector<Matrix>& inputs, const Matrix& y,
                    bool gradient) {
  const CovFactor factor(build_joint_cov(hp, inputs, true));
  const Matrix alpha = factor.solve(y);
  const double k = static_cast<double>(y.cols());
  Evaluation ev;
  ev.value = -0.5 * k * factor.log_det() - 0.5 * (y.array() * alpha.array()).sum() -
             0.5 * k * static_cast<double>(y.rows()) * kLog2Pi;
  if (!gradient) return ev;
  const Matrix w = alpha * alpha.transpose() - k * factor.inverse();
  const auto grads = joint_cov_grad(hp, inputs);
  ev.gradient.resize(hp.values.size());
  for (Index p = 0; p < hp.values.size(); ++p)
    ev.gradient(p) = 0.5 * (w.array() * grads[static_cast<size_t>(p)].array()).sum();
  return ev;
}

}  // namespace

Index MultiDataset::realizations() const {
  return responses.empty() ? 0 : responses.front().cols();
}

Index MultiDataset::input_dim() const { return inputs.empty() ? 0 : inputs.front().cols(); }

Index MultiDataset::total_rows() const {
  Index n = 0;
  for (const auto& t : inputs) n += t.rows();
  return n;
}

void MultiDataset::validate() const {
  require(outputs() >= 2, "multivariate data needs at least two outputs");
  require(inputs.size() == responses.size(), "one response matrix per output is required");
  const Index q = input_dim(), m = realizations();
  require(q >= 1 && m >= 1, "multivariate data needs inputs and at least one realization");
  for (size_t j = 0; j < inputs.size(); ++j) {
    const std::string name = "output " + std::to_string(j + 1);
    require(inputs[j].cols() == q, name + ": input dimension differs from output 1");
    require(inputs[j].rows() >= 1, name + ": no observations");
    require(responses[j].rows() == inputs[j].rows(), name + ": response rows differ from inputs");
    require(responses[j].cols() == m, name + ": realization count differs from output 1");
    require(inputs[j].allFinite() && responses[j].allFinite(), name + ": non-finite values");
  }
}

MGPRHyper MGPRHyper::zeros(Index outputs, Index input_dim) {
  MGPRHyper hp;
  hp.outputs = outputs;
  hp.input_dim = input_dim;
  hp.values = Vector::Zero(size(outputs, input_dim));
  return hp;
}

std::vector<std::string> MGPRHyper::names() const {
  std::vector<std::string> out;
  for (Index j = 0; j < outputs; ++j) {
    const std::string sfx = "_" + std::to_string(j + 1);
    out.push_back("shared_scale" + sfx);
    for (Index q = 0; q < input_dim; ++q)
      out.push_back("shared_precision" + sfx + "_" + std::to_string(q + 1));
    out.push_back("own_scale" + sfx);
    for (Index q = 0; q < input_dim; ++q)
      out.push_back("own_precision" + sfx + "_" + std::to_string(q + 1));
    out.push_back("noise" + sfx);
  }
  return out;
}

void MGPRHyper::validate() const {
  require(outputs >= 2 && input_dim >= 1, "MGPR needs p >= 2 outputs and Q >= 1");
  require(values.size() == size(outputs, input_dim),
          "MGPR hyperparameter vector has " + std::to_string(values.size()) + " entries, expected " +
              std::to_string(size(outputs, input_dim)));
  for (Index j = 0; j < outputs; ++j) {
    const Index o = offset(j);
    for (Index k = 0; k < block(); ++k) {
      const double v = values(o + k);
      const bool may_be_off = k == 0 || k == block() - 1;
      require(!std::isnan(v) && v < std::numeric_limits<double>::infinity() &&
                  (may_be_off || std::isfinite(v)),
              "MGPR hyperparameter " + std::to_string(o + k) + " is not finite");
    }
  }
}

Matrix cross_cov(const MGPRHyper& hp, Index i, Index j, const Matrix& ti, const Matrix& tj,
                 bool add_noise) {
  hp.validate();
  check_index(hp, i);
  check_index(hp, j);
  require(ti.cols() == hp.input_dim && tj.cols() == hp.input_dim, "MGPR input dimension mismatch");
  Matrix out = convolve(hp.log_shared_scale(i), hp.log_shared_precision(i), hp.log_shared_scale(j),
                        hp.log_shared_precision(j), ti, tj, false)
                   .value;
  if (i == j) {
    out += convolve(hp.log_own_scale(i), hp.log_own_precision(i), hp.log_own_scale(i),
                    hp.log_own_precision(i), ti, tj, false)
               .value;
    if (add_noise) {
      const double noise = std::exp(hp.noise_log_var(i));
      const auto mask = coincidence(ti, tj);
      for (Index a = 0; a < out.rows(); ++a)
        for (Index b = 0; b < out.cols(); ++b)
          if (mask(a, b)) out(a, b) += noise;
    }
  }
  if (!out.allFinite()) throw NumericalError("MGPR covariance has non-finite entries");
  return out;
}

Matrix build_joint_cov(const MGPRHyper& hp, const std::vector<Matrix>& inputs, bool add_noise) {
  require(static_cast<Index>(inputs.size()) == hp.outputs, "one input block per output required");
  const auto off = block_offsets(inputs);
  Matrix out(off.back(), off.back());
  for (Index i = 0; i < hp.outputs; ++i)
    for (Index j = i; j < hp.outputs; ++j) {
      const auto si = static_cast<size_t>(i), sj = static_cast<size_t>(j);
      const Matrix block = cross_cov(hp, i, j, inputs[si], inputs[sj], add_noise);
      out.block(off[si], off[sj], block.rows(), block.cols()) = block;
      if (i != j) out.block(off[sj], off[si], block.cols(), block.rows()) = block.transpose();
    }
  return out;
}

std::vector<Matrix> joint_cov_grad(const MGPRHyper& hp, const std::vector<Matrix>& inputs) {
  hp.validate();
  require(static_cast<Index>(inputs.size()) == hp.outputs, "one input block per output required");
  const auto off = block_offsets(inputs);
  const Index n = off.back(), q = hp.input_dim;
  std::vector<Matrix> grads(static_cast<size_t>(hp.values.size()), Matrix::Zero(n, n));
  auto add = [&](Index param, size_t bi, size_t bj, const Matrix& d) {
    Matrix& g = grads[static_cast<size_t>(param)];
    g.block(off[bi], off[bj], d.rows(), d.cols()) += d;
    if (bi != bj) g.block(off[bj], off[bi], d.cols(), d.rows()) += d.transpose();
  };
  for (Index i = 0; i < hp.outputs; ++i) {
    const auto si = static_cast<size_t>(i);
    for (Index j = i; j < hp.outputs; ++j) {
      const auto sj = static_cast<size_t>(j);
      const ConvTerm shared =
          convolve(hp.log_shared_scale(i), hp.log_shared_precision(i), hp.log_shared_scale(j),
                   hp.log_shared_precision(j), inputs[si], inputs[sj], true);
      add(hp.offset(i), si, sj, shared.value);
      add(hp.offset(j), si, sj, shared.value);
      for (Index k = 0; k < q; ++k) {
        add(hp.offset(i) + 1 + k, si, sj, shared.d_prec_i[static_cast<size_t>(k)]);
        add(hp.offset(j) + 1 + k, si, sj, shared.d_prec_j[static_cast<size_t>(k)]);
      }
    }
    const ConvTerm own = convolve(hp.log_own_scale(i), hp.log_own_precision(i), hp.log_own_scale(i),
                                  hp.log_own_precision(i), inputs[si], inputs[si], true);
    add(hp.offset(i) + 1 + q, si, si, 2.0 * own.value);
    for (Index k = 0; k < q; ++k)
      add(hp.offset(i) + 2 + q + k, si, si,
          own.d_prec_i[static_cast<size_t>(k)] + own.d_prec_j[static_cast<size_t>(k)]);
    const double noise = std::exp(hp.noise_log_var(i));
    const auto mask = coincidence(inputs[si], inputs[si]);
    Matrix d = Matrix::Zero(inputs[si].rows(), inputs[si].rows());
    for (Index a = 0; a < d.rows(); ++a)
      for (Index b = 0; b < d.cols(); ++b)
        if (mask(a, b)) d(a, b) = noise;
    add(hp.offset(i) + hp.block() - 1, si, si, d);
  }
  return grads;
}

double mgpr_log_likelihood(const MGPRHyper& hp, const MultiDataset& data,
                           const std::vector<MeanModel>& means) {
  data.validate();
  require(hp.outputs == data.outputs() && hp.input_dim == data.input_dim(),
          "MGPR hyperparameters do not match the data shape");
  return evaluate(hp, data.inputs, centred_responses(data, means), false).value;
}

Vector mgpr_log_lik_gradient(const MGPRHyper& hp, const MultiDataset& data,
                             const std::vector<MeanModel>& means) {
  data.validate();
  require(hp.outputs == data.outputs() && hp.input_dim == data.input_dim(),
          "MGPR hyperparameters do not match the data shape");
  return evaluate(hp, data.inputs, centred_responses(data, means), true).gradient;
}

MGPRModel::MGPRModel(MGPRHyper hp, std::vector<MeanModel> means, MultiDataset train,
                     FitReport report)
    : hp_(std::move(hp)), means_(std::move(means)), train_(std::move(train)),
      report_(std::move(report)) {
  hp_.validate();
  train_.validate();
  require(hp_.outputs == train_.outputs() && hp_.input_dim == train_.input_dim(),
          "MGPR hyperparameters do not match the data shape");
  require(static_cast<Index>(means_.size()) == train_.outputs(), "one mean model per output required");
}

MGPRModel mgpr_fit(const MultiDataset& data, const MGPRFitOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  data.validate();
  require(options.restarts >= 1, "at least one optimizer start is required");
  const Index p = data.outputs(), q = data.input_dim();

  MultiDataset train = data;
  if (options.subset_size) {
    for (Index j = 0; j < p; ++j) {
      const auto s = static_cast<size_t>(j);
      const Dataset sub = subset_of_data(
          Dataset::shared(data.inputs[s], data.responses[s]), *options.subset_size,
          seeds::derive(options.seed, seeds::kSubsetOfData) + static_cast<std::uint64_t>(j));
      train.inputs[s] = sub.grid();
      train.responses[s] = sub.responses();
    }
  }
  std::vector<MeanModel> means;
  for (Index j = 0; j < p; ++j) {
    const auto s = static_cast<size_t>(j);
    means.push_back(mean_fit(Dataset::shared(train.inputs[s], train.responses[s]), options.mean));
  }
  const Matrix y = centred_responses(train, means);

  // Start: each process explains half the output variance with length scale
  // 0.1 x range; noise at 10% of the variance.
  MGPRHyper base = MGPRHyper::zeros(p, q);
  Vector range(q);
  for (Index k = 0; k < q; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& t : train.inputs) {
      lo = std::min(lo, t.col(k).minCoeff());
      hi = std::max(hi, t.col(k).maxCoeff());
    }
    range(k) = hi > lo ? hi - lo : 1.0;
  }
  const Vector log_prec = (-2.0 * (0.1 * range).array().log()).matrix();
  Index row = 0;
  for (Index j = 0; j < p; ++j) {
    const Index n = train.inputs[static_cast<size_t>(j)].rows();
    const Matrix block = y.middleRows(row, n);
    row += n;
    const double var = std::max(block.squaredNorm() / static_cast<double>(block.size()), 1e-8);
    // Scale giving variance var/2: c^2 pi^{Q/2} |B|^{-1/2} = var/2.
    const double log_scale = 0.5 * (std::log(0.5 * var) - 0.5 * static_cast<double>(q) *
                                                              std::log(std::numbers::pi) +
                                    0.5 * log_prec.sum());
    const Index o = base.offset(j);
    base.values(o) = log_scale;
    base.values.segment(o + 1, q) = log_prec;
    base.values(o + 1 + q) = log_scale;
    base.values.segment(o + 2 + q, q) = log_prec;
    base.values(o + base.block() - 1) = std::log(std::max(0.1 * var, 1e-8));
  }
  std::vector<Vector> starts{base.values};
  std::mt19937_64 rng(seeds::derive(options.seed, seeds::kRestarts));
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  for (int r = 1; r < options.restarts; ++r) {
    Vector x = base.values;
    for (Index j = 0; j < p; ++j) {
      const Index o = base.offset(j);
      const double ds = shift(rng), dp = 2.0 * shift(rng), os = shift(rng), op = 2.0 * shift(rng);
      x(o) += ds;
      x.segment(o + 1, q).array() += dp;
      x(o + 1 + q) += os;
      x.segment(o + 2 + q, q).array() += op;
      x(o + base.block() - 1) += shift(rng);
    }
    starts.push_back(std::move(x));
  }

  auto negative_ll = [&](const Vector& theta) {
    MGPRHyper hp = base;
    hp.values = theta;
    return -evaluate(hp, train.inputs, y, false).value;
  };
  Objective objective;
  if (options.use_gradient) {
    objective = [&](const Vector& theta, Vector* gradient) {
      MGPRHyper hp = base;
      hp.values = theta;
      const auto ev = evaluate(hp, train.inputs, y, gradient != nullptr);
      if (gradient) *gradient = -ev.gradient;
      return -ev.value;
    };
  } else {
    objective = with_central_differences(
        [&](const Vector& theta) {
          try {
            return negative_ll(theta);
          } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
          }
        },
        1e-6);
  }
  const auto best = minimize_multistart(objective, starts, options.optimizer, "MGPR fit");

  FitReport report;
  report.analytic_gradient = options.use_gradient;
  report.converged = best.converged;
  report.log_likelihood = -best.value;
  report.gradient_norm = best.gradient_norm;
  report.iterations = best.iterations;
  try {
    report.initial_log_likelihood = -negative_ll(starts.front());
  } catch (const NumericalError&) {
    report.initial_log_likelihood = -std::numeric_limits<double>::infinity();
  }
  for (const auto& s : best.starts) {
    RestartDiagnostics diag;
    diag.start = s.start;
    diag.end = s.end;
    diag.log_likelihood = -s.value;
    diag.gradient_norm = s.gradient_norm;
    diag.iterations = s.iterations;
    diag.converged = s.converged;
    diag.message = s.message;
    report.restarts.push_back(std::move(diag));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  MGPRHyper hp = base;
  hp.values = best.x;
  return MGPRModel(std::move(hp), std::move(means), std::move(train), std::move(report));
}

std::vector<OutputObservations> mgpr_training_observations(const MGPRModel& model, Index m) {
  const auto& train = model.train();
  require(m >= 0 && m < train.realizations(), "realization index out of range");
  std::vector<OutputObservations> obs;
  for (Index j = 0; j < train.outputs(); ++j) {
    const auto s = static_cast<size_t>(j);
    obs.push_back({train.inputs[s], train.responses[s].col(m)});
  }
  return obs;
}

std::vector<PredictionResult> mgpr_predict(const MGPRModel& model,
                                           const std::vector<OutputObservations>& obs,
                                           const std::vector<Matrix>& tstar, bool noise_free) {
  const MGPRHyper& hp = model.hyper();
  const Index p = hp.outputs, q = hp.input_dim;
  require(static_cast<Index>(obs.size()) == p && static_cast<Index>(tstar.size()) == p,
          "MGPR prediction needs observations and prediction inputs for every output");
  bool any_star = false;
  std::vector<Matrix> obs_inputs, star_inputs;
  Vector resid(0);
  for (Index j = 0; j < p; ++j) {
    const auto s = static_cast<size_t>(j);
    const Matrix oi = obs[s].inputs.rows() == 0 ? Matrix(0, q) : obs[s].inputs;
    const Matrix ts = tstar[s].rows() == 0 ? Matrix(0, q) : tstar[s];
    require(oi.cols() == q && ts.cols() == q, "MGPR prediction input dimension mismatch");
    require(oi.rows() == obs[s].response.size(),
            "output " + std::to_string(j + 1) + ": observation inputs and responses differ in length");
    require(oi.allFinite() && ts.allFinite() && obs[s].response.allFinite(),
            "MGPR prediction inputs must be finite");
    any_star = any_star || ts.rows() > 0;
    const Vector r = obs[s].response - mean_eval(model.means()[s], oi);
    Vector joined(resid.size() + r.size());
    joined << resid, r;
    resid = std::move(joined);
    obs_inputs.push_back(oi);
    star_inputs.push_back(ts);
  }
  require(any_star, "MGPR prediction needs at least one prediction input");

  const auto obs_off = block_offsets(obs_inputs), star_off = block_offsets(star_inputs);
  Matrix cross(star_off.back(), obs_off.back());
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) {
      const auto si = static_cast<size_t>(i), sj = static_cast<size_t>(j);
      if (star_inputs[si].rows() == 0 || obs_inputs[sj].rows() == 0) continue;
      cross.block(star_off[si], obs_off[sj], star_inputs[si].rows(), obs_inputs[sj].rows()) =
          cross_cov(hp, i, j, star_inputs[si], obs_inputs[sj], false);
    }
  Vector mean = Vector::Zero(star_off.back());
  Vector reduction = Vector::Zero(star_off.back());
  if (obs_off.back() > 0) {
    const CovFactor factor(build_joint_cov(hp, obs_inputs, true));
    mean = cross * factor.solve(resid);
    reduction = factor.half_solve(cross.transpose()).colwise().squaredNorm().transpose();
  }

  std::vector<PredictionResult> out(static_cast<size_t>(p));
  for (Index j = 0; j < p; ++j) {
    const auto s = static_cast<size_t>(j);
    const Matrix& ts = star_inputs[s];
    PredictionResult& r = out[s];
    r.grid = ts;
    r.noise_free = noise_free;
    if (ts.rows() == 0) continue;
    const Matrix prior = cross_cov(hp, j, j, ts.topRows(1), ts.topRows(1), false);
    Vector var = Vector::Constant(ts.rows(), prior(0, 0)) - reduction.segment(star_off[s], ts.rows());
    if ((var.array() < 0.0).any()) {
      r.warnings.push_back("negative predictive variances clamped to zero");
      var = var.cwiseMax(0.0);
    }
    if (!noise_free) var.array() += std::exp(hp.noise_log_var(j));
    r.mean = mean_eval(model.means()[s], ts) + mean.segment(star_off[s], ts.rows());
    r.sd = var.cwiseSqrt();
  }
  return out;
}

}  // namespace fungp
