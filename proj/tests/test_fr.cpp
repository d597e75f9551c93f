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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fungp/fr.hpp"
#include "fungp/simulate.hpp"
#include "test_util.hpp"

using namespace fungp;
using fungp::testing::normal_vector;
using fungp::testing::uniform_matrix;

namespace {

FRData shared_grid_data(Index m, Index n, Index p, std::mt19937_64& rng) {
  FRData d;
  const Vector t = Vector::LinSpaced(n, 0.0, 2.0);
  d.u = uniform_matrix(m, p, rng, -1.0, 2.0);
  for (Index i = 0; i < m; ++i) {
    d.t.push_back(t);
    d.y.push_back(normal_vector(n, rng) + ((3.0 * t.array()).sin() * d.u(i, 0)).matrix());
  }
  return d;
}

FROptions unpenalised(Index h) {
  FROptions o;
  o.response.nbasis = h;
  o.response.norder = 4;
  o.response.lambda = 0.0;
  return o;
}

}  // namespace

TEST(FunctionalRegression, MatchesDenseLeastSquares) {
  std::mt19937_64 rng(1);
  const auto data = shared_grid_data(12, 40, 3, rng);
  const auto model = fr_fit(data, unpenalised(8));
  const Matrix phi = basis_eval(model.basis, data.t[0]);
  const Matrix hat = (phi.transpose() * phi).inverse() * phi.transpose();
  Matrix a(12, 8);
  for (Index m = 0; m < 12; ++m) a.row(m) = (hat * data.y[static_cast<size_t>(m)]).transpose();
  EXPECT_LT((model.a - a).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix bt = (data.u.transpose() * data.u).inverse() * data.u.transpose() * a;
  EXPECT_LT((model.b.transpose() - bt).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FunctionalRegression, InterceptOnlyGivesMeanSmooth) {
  std::mt19937_64 rng(2);
  auto data = shared_grid_data(9, 30, 1, rng);
  data.u.setOnes();
  FROptions options;
  const auto model = fr_fit(data, options);
  const Vector mean_coef = model.a.colwise().mean().transpose();
  EXPECT_LT((model.b.col(0) - mean_coef).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FunctionalRegression, OrthonormalCovariates) {
  std::mt19937_64 rng(3);
  auto data = shared_grid_data(10, 30, 3, rng);
  Eigen::HouseholderQR<Matrix> qr(uniform_matrix(10, 3, rng, -1, 1));
  data.u = qr.householderQ() * Matrix::Identity(10, 3);
  const auto model = fr_fit(data, unpenalised(7));
  EXPECT_LT((model.b.transpose() - data.u.transpose() * model.a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FunctionalRegression, RecoversCoefficientFunctions) {
  // Functional regression part of the data-generating process only; the GP
  // term acts as a smooth per-curve offset that M = 20 curves cannot average out.
  const auto ex = simulate_gpfr_example(42, 20, 50, 60, false);
  FRData data = ex.train;
  data.x.clear();
  FROptions options;
  options.response.nbasis = 15;
  const auto model = fr_fit(data, options);
  const Vector grid = ex.train.t[0];
  const Matrix beta = fr_beta(model, grid);
  double se0 = 0.0, se1 = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    se0 += std::pow(beta(i, 0) - beta0_example(grid(i)), 2);
    se1 += std::pow(beta(i, 1) - beta1_example(grid(i)), 2);
  }
  const double n = static_cast<double>(grid.size());
  EXPECT_LT(std::sqrt(se0 / n), 0.15);
  EXPECT_LT(std::sqrt(se1 / n), 0.15);
}

TEST(FunctionalRegression, MeanEvaluation) {
  std::mt19937_64 rng(4);
  const auto data = shared_grid_data(8, 25, 2, rng);
  const auto model = fr_fit(data, FROptions{});
  const Vector t = data.t[0];
  EXPECT_EQ(fr_mean_eval(model, Vector::Zero(2), {}, t).cwiseAbs().maxCoeff(), 0.0);
  const Vector u3 = data.u.row(3).transpose();
  const Vector fitted3 = basis_eval(model.basis, t) * model.b * u3;
  EXPECT_LT((fr_mean_eval(model, u3, {}, t) - fitted3).cwiseAbs().maxCoeff(), 1e-12);
  const Vector ustar = normal_vector(2, rng);
  const Matrix phi = basis_eval(model.basis, t);
  Vector oracle = Vector::Zero(t.size());
  for (Index i = 0; i < t.size(); ++i)
    for (Index h = 0; h < model.basis.nbasis; ++h)
      for (Index j = 0; j < 2; ++j) oracle(i) += ustar(j) * model.b(h, j) * phi(i, h);
  EXPECT_LT((fr_mean_eval(model, ustar, {}, t) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(fr_mean_eval(model, Vector::Zero(3), {}, t), ValidationError);
}

TEST(FunctionalRegression, FunctionalCovariates) {
  std::mt19937_64 rng(5);
  FRData data;
  const Index m = 10, n = 40;
  const Vector t = Vector::LinSpaced(n, 0.0, 1.0);
  data.u = Matrix::Ones(m, 1);
  data.x.assign(1, {});
  for (Index i = 0; i < m; ++i) {
    const Vector x = normal_vector(n, rng) + Vector::Constant(n, 1.0 + 0.1 * static_cast<double>(i));
    data.t.push_back(t);
    data.x[0].push_back(x);
    // beta_0(t) = 1 + t is in the spline span; alpha = 2.5
    data.y.push_back((1.0 + t.array() + 2.5 * x.array()).matrix());
  }
  FROptions options = unpenalised(6);
  options.concurrent = false;
  const auto scalar = fr_fit(data, options);
  ASSERT_EQ(scalar.alpha.size(), 1);
  EXPECT_NEAR(scalar.alpha(0), 2.5, 1e-6);
  EXPECT_LT((fr_beta(scalar, t).col(0).array() - (1.0 + t.array())).abs().maxCoeff(), 1e-6);

  // Concurrent: alpha(t) = 2 - t, also in the span.
  for (Index i = 0; i < m; ++i)
    data.y[static_cast<size_t>(i)] =
        (1.0 + t.array() + (2.0 - t.array()) * data.x[0][static_cast<size_t>(i)].array()).matrix();
  options.concurrent = true;
  options.coefficient.nbasis = 5;
  options.coefficient.norder = 4;
  options.coefficient.lambda = 0.0;
  const auto conc = fr_fit(data, options);
  EXPECT_LT((fr_alpha(conc, t).col(0).array() - (2.0 - t.array())).abs().maxCoeff(), 1e-6);
  const Vector xs = Vector::Constant(n, 3.0);
  EXPECT_LT((fr_mean_eval(conc, Vector::Ones(1), {xs}, t).array() -
             (1.0 + t.array() + 3.0 * (2.0 - t.array())))
                .abs()
                .maxCoeff(),
            1e-6);
}

TEST(FunctionalRegression, RaggedGridsAndErrors) {
  std::mt19937_64 rng(6);
  FRData data;
  data.u = Matrix::Ones(3, 1);
  for (Index n : {20, 35, 27}) {
    Vector t = Vector::LinSpaced(n, 0.0, 1.0);
    data.t.push_back(t);
    data.y.push_back(((2.0 * t.array()).cos()).matrix() + 0.01 * normal_vector(n, rng));
  }
  const auto model = fr_fit(data, FROptions{});
  const Vector grid = Vector::LinSpaced(11, 0.0, 1.0);
  EXPECT_LT((fr_beta(model, grid).col(0).array() - (2.0 * grid.array()).cos()).abs().maxCoeff(),
            0.05);

  FRData bad = data;
  bad.u = Matrix::Ones(3, 2);
  EXPECT_THROW(fr_fit(bad, FROptions{}), ValidationError);
  bad = data;
  bad.y[1] = Vector::Zero(3);
  EXPECT_THROW(fr_fit(bad, FROptions{}), ValidationError);
}
