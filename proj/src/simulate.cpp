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

#include "fungp/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace fungp {

Matrix sample_mvn(const Matrix& cov, Index count, std::mt19937_64& rng) {
  require(cov.rows() == cov.cols(), "sample_mvn: covariance must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix factor = eig.eigenvectors() * root.asDiagonal();
  std::normal_distribution<double> z;
  Matrix draws(cov.rows(), count);
  for (Index c = 0; c < count; ++c)
    for (Index i = 0; i < cov.rows(); ++i) draws(i, c) = z(rng);
  return factor * draws;
}

GPSample simulate_gp(const KernelSpec& spec, const HyperParams& hp, const Matrix& inputs,
                     Index realizations, const Vector& mean, std::uint64_t seed) {
  spec.validate();
  validate_layout(spec, hp);
  require(inputs.cols() == spec.input_dim, "simulate: input dimension mismatch");
  require(realizations >= 1, "simulate: at least one realization");
  require(mean.size() == 0 || mean.size() == inputs.rows(), "simulate: mean length mismatch");
  std::mt19937_64 rng(seed);
  GPSample out;
  out.inputs = inputs;
  out.latent = sample_mvn(cov_matrix(spec, hp, inputs, inputs, false), realizations, rng);
  if (mean.size() > 0) out.latent.colwise() += mean;
  const double sd = std::sqrt(std::exp(hp.noise_log_var()));
  std::normal_distribution<double> z;
  out.responses = out.latent;
  for (Index c = 0; c < realizations; ++c)
    for (Index i = 0; i < inputs.rows(); ++i) out.responses(i, c) += sd * z(rng);
  return out;
}

double beta0_example(double) { return 1.0; }
double beta1_example(double t) { return std::sin(std::pow(0.5 * t, 3)); }

GPFRExample simulate_gpfr_example(std::uint64_t seed, Index curves, Index n, Index n_new,
                                  bool include_tau) {
  require(curves >= 2 && n >= 2 && n_new >= 2, "simulate: need at least two curves and points");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  GPFRExample ex;
  ex.kernel.terms = {KernelFamily::PowEx};
  ex.kernel.gamma = 1.0;
  ex.kernel.input_dim = 1;
  ex.truth = HyperParams::zeros(ex.kernel);  // v = 0, w = 0, noise variance 1

  auto draw_curve = [&](const Vector& t, Vector& x, Vector& y, Vector& latent, Vector& u) {
    u.resize(2);
    u(0) = z(rng);
    u(1) = 10.0 + 5.0 * z(rng);
    x.resize(t.size());
    for (Index i = 0; i < t.size(); ++i) x(i) = std::exp(t(i)) + 0.1 * z(rng);
    const Matrix tau = include_tau
                           ? sample_mvn(cov_matrix(ex.kernel, ex.truth, x, x, false), 1, rng)
                           : Matrix::Zero(t.size(), 1);
    latent.resize(t.size());
    y.resize(t.size());
    for (Index i = 0; i < t.size(); ++i) {
      latent(i) = u(0) * beta0_example(t(i)) + u(1) * beta1_example(t(i)) + tau(i, 0);
      y(i) = latent(i) + z(rng);
    }
  };

  const Vector grid = Vector::LinSpaced(n, -4.0, 4.0);
  ex.train.u.resize(curves, 2);
  ex.train.x.assign(1, {});
  for (Index m = 0; m < curves; ++m) {
    Vector x, y, latent, u;
    draw_curve(grid, x, y, latent, u);
    ex.train.t.push_back(grid);
    ex.train.y.push_back(y);
    ex.train.x[0].push_back(x);
    ex.train.u.row(m) = u.transpose();
    ex.train_latent.push_back(latent);
  }
  ex.t_new = Vector::LinSpaced(n_new, -4.0, 4.0);
  draw_curve(ex.t_new, ex.x_new, ex.y_new, ex.latent_new, ex.u_new);
  return ex;
}

MGPRSample simulate_mgpr(const MGPRHyper& hp, const std::vector<Matrix>& inputs, Index realizations,
                         const std::vector<Vector>& means, std::uint64_t seed) {
  hp.validate();
  require(static_cast<Index>(inputs.size()) == hp.outputs, "simulate: one input block per output");
  require(means.empty() || static_cast<Index>(means.size()) == hp.outputs,
          "simulate: one mean per output");
  require(realizations >= 1, "simulate: at least one realization");
  std::mt19937_64 rng(seed);
  const Matrix joint = sample_mvn(build_joint_cov(hp, inputs, false), realizations, rng);
  std::normal_distribution<double> z;
  MGPRSample out;
  out.truth = hp;
  Index row = 0;
  for (Index j = 0; j < hp.outputs; ++j) {
    const auto s = static_cast<size_t>(j);
    const Index n = inputs[s].rows();
    Matrix latent = joint.middleRows(row, n);
    row += n;
    if (!means.empty()) {
      require(means[s].size() == n, "simulate: mean length mismatch for an output");
      latent.colwise() += means[s];
    }
    const double sd = std::sqrt(std::exp(hp.noise_log_var(j)));
    Matrix y = latent;
    for (Index c = 0; c < realizations; ++c)
      for (Index i = 0; i < n; ++i) y(i, c) += sd * z(rng);
    out.data.inputs.push_back(inputs[s]);
    out.data.responses.push_back(std::move(y));
    out.latent.push_back(std::move(latent));
  }
  return out;
}

MGPRSample simulate_mgpr_example(std::uint64_t seed, Index realizations, Index n) {
  require(n >= 2, "simulate: need at least two points");
  // Natural-scale truth: variance and precision of the shared and own parts,
  // noise variance, and linear mean b_0 + b_1 t.
  struct Output {
    double shared_var, shared_prec, own_var, own_prec, noise, b0, b1;
  };
  const Output truth[3] = {{1.0, 100.0, 0.3, 400.0, 0.04, 1.0, 2.0},
                           {0.8, 60.0, 0.4, 300.0, 0.02, -1.0, 1.0},
                           {1.2, 150.0, 0.2, 250.0, 0.05, 0.5, -3.0}};
  auto log_scale = [](double var, double prec) {
    // A kernel c exp(-b u^2 / 2) convolved with itself has variance
    // c^2 sqrt(pi / b).
    return 0.5 * (std::log(var) - 0.5 * std::log(std::numbers::pi) + 0.5 * std::log(prec));
  };
  MGPRHyper hp = MGPRHyper::zeros(3, 1);
  std::vector<Matrix> inputs;
  std::vector<Vector> means;
  std::vector<Vector> coefficients;
  const Vector grid = Vector::LinSpaced(n, 0.0, 1.0);
  for (Index j = 0; j < 3; ++j) {
    const Output& o = truth[j];
    hp.values.segment(hp.offset(j), hp.block()) << log_scale(o.shared_var, o.shared_prec),
        std::log(o.shared_prec), log_scale(o.own_var, o.own_prec), std::log(o.own_prec),
        std::log(o.noise);
    inputs.push_back(grid);
    means.push_back((o.b0 + o.b1 * grid.array()).matrix());
    coefficients.push_back((Vector(2) << o.b0, o.b1).finished());
  }
  MGPRSample out = simulate_mgpr(hp, inputs, realizations, means, seed);
  out.mean_coefficients = std::move(coefficients);
  return out;
}

}  // namespace fungp
