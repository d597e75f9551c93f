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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fungp/basis.hpp"
#include "fungp/linalg.hpp"
#include "test_util.hpp"

using namespace fungp;
using fungp::testing::normal_vector;
using fungp::testing::uniform_vector;

namespace {

Vector random_grid(Index n, double lo, double hi, std::mt19937_64& rng) {
  Vector t = uniform_vector(n, rng, lo, hi);
  t(0) = lo;
  t(n - 1) = hi;
  return t;
}

}  // namespace

TEST(Basis, BSplinePartitionOfUnity) {
  std::mt19937_64 rng(1);
  for (int order = 1; order <= 6; ++order)
    for (Index h : {order, order + 1, order + 7}) {
      const auto basis = BasisSystem::bspline(-2.0, 3.0, h, order);
      const Matrix phi = basis_eval(basis, random_grid(200, -2.0, 3.0, rng));
      EXPECT_LT((phi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12)
          << order << " " << h;
      EXPECT_GE(phi.minCoeff(), 0.0);
    }
}

TEST(Basis, BSplineKnotsAndLocalSupport) {
  const auto basis = BasisSystem::bspline(0.0, 1.0, 7, 4);
  const auto knots = basis.knots();
  ASSERT_EQ(knots.size(), 11u);
  EXPECT_DOUBLE_EQ(knots[4], 0.25);
  EXPECT_DOUBLE_EQ(knots[6], 0.75);
  const Matrix phi = basis_eval(basis, Vector::Constant(1, 0.1));
  EXPECT_EQ(phi(0, 4), 0.0);
  EXPECT_DOUBLE_EQ(basis_eval(basis, Vector::Constant(1, 1.0))(0, 6), 1.0);
  EXPECT_DOUBLE_EQ(basis_eval(basis, Vector::Constant(1, 0.0))(0, 0), 1.0);
}

TEST(Basis, FourierConstantColumn) {
  std::mt19937_64 rng(2);
  const auto basis = BasisSystem::fourier(0.0, 2.0, 7);
  const Vector t = uniform_vector(30, rng, -5.0, 5.0);
  const Matrix phi = basis_eval(basis, t);
  EXPECT_EQ((phi.col(0).array() - 1.0).abs().maxCoeff(), 0.0);
  // period 2: phi(t) == phi(t + 2)
  const Matrix shifted = basis_eval(basis, (t.array() + 2.0).matrix());
  EXPECT_LT((phi - shifted).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(BasisSystem::fourier(0.0, 1.0, 4), ValidationError);
}

TEST(Basis, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const std::vector<BasisSystem> systems = {BasisSystem::bspline(0.0, 1.0, 12, 4),
                                            BasisSystem::bspline(-1.0, 2.0, 9, 6),
                                            BasisSystem::fourier(0.0, 1.0, 9)};
  for (const auto& basis : systems) {
    const double span = basis.hi - basis.lo;
    const Vector t = uniform_vector(40, rng, basis.lo + 0.01 * span, basis.hi - 0.01 * span);
    for (int d = 1; d <= 2; ++d) {
      auto f = [&](const Vector& x) {
        return Matrix(basis_eval(basis, Vector::Constant(1, x(0)), d - 1));
      };
      const Matrix analytic = basis_eval(basis, t, d);
      for (Index i = 0; i < t.size(); ++i) {
        const Matrix fd = fungp::testing::central_diff(f, Vector::Constant(1, t(i)), 0, 1e-6);
        const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        EXPECT_LT((analytic.row(i) - fd).cwiseAbs().maxCoeff() / scale, 1e-5)
            << "deriv " << d << " at " << t(i);
      }
    }
  }
}

TEST(Basis, GramMatchesTrapezoid) {
  const auto basis = BasisSystem::bspline(0.0, 2.0, 10, 4);
  const Matrix g0 = gram_matrix(basis, 0);
  // Composite trapezoid on each knot interval, where the integrand is smooth.
  auto knots = basis.knots();
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  Matrix oracle = Matrix::Zero(10, 10);
  const Index pts = 40001;
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const Vector t = Vector::LinSpaced(pts, knots[k], knots[k + 1]);
    const Matrix phi = basis_eval(basis, t);
    Vector w = Vector::Constant(pts, (knots[k + 1] - knots[k]) / static_cast<double>(pts - 1));
    w(0) *= 0.5;
    w(pts - 1) *= 0.5;
    oracle += phi.transpose() * w.asDiagonal() * phi;
  }
  EXPECT_LT((g0 - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Basis, PenaltyIsSymmetricPsdAndKillsLines) {
  for (const auto& basis :
       {BasisSystem::bspline(0.0, 1.0, 15, 6), BasisSystem::bspline(0.0, 5.0, 8, 4)}) {
    const Matrix p = penalty_matrix(basis, Vector::Zero(2));
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12 * p.cwiseAbs().maxCoeff());
    EXPECT_GE(min_eigenvalue(p), -1e-10);
    // Coefficients of a straight line reproduce it exactly.
    const Vector t = Vector::LinSpaced(50, basis.lo, basis.hi);
    const Vector y = (2.0 - 0.7 * t.array()).matrix();
    const Vector c = smooth_curve(y, t, basis, 0.0, p);
    EXPECT_LT(std::abs(c.dot(p * c)), 1e-9 * c.squaredNorm() * p.norm());

    const Matrix full = penalty_matrix(basis, (Vector(3) << 1.0, 2.0, 0.5).finished());
    const Matrix manual =
        gram_matrix(basis, 0) + 2.0 * gram_matrix(basis, 1) + 0.5 * gram_matrix(basis, 2);
    EXPECT_LT((full - manual).cwiseAbs().maxCoeff(), 1e-12 * manual.cwiseAbs().maxCoeff());
  }
  EXPECT_THROW(penalty_matrix(BasisSystem::bspline(0, 1, 6, 4), Vector::Zero(4)),
               ValidationError);
}

TEST(Smoothing, ExactRepresentation) {
  std::mt19937_64 rng(4);
  const auto basis = BasisSystem::bspline(0.0, 1.0, 10, 5);
  const Vector coef = normal_vector(10, rng);
  const Vector t = random_grid(60, 0.0, 1.0, rng);
  const Vector y = basis_eval(basis, t) * coef;
  const Vector c = smooth_curve(y, t, basis, 0.0, Matrix::Zero(10, 10));
  EXPECT_LE((basis_eval(basis, t) * c - y).norm(), 1e-10);
}

TEST(Smoothing, LargeLambdaGivesRegressionLine) {
  std::mt19937_64 rng(5);
  const auto basis = BasisSystem::bspline(0.0, 1.0, 12, 4);
  const Vector t = Vector::LinSpaced(80, 0.0, 1.0);
  Vector y = ((5.0 * t.array()).sin() + t.array()).matrix() + 0.1 * normal_vector(80, rng);
  SmoothSpec spec;
  spec.lambda = 1e12;
  const Vector c = smooth_curve(y, t, basis, spec);
  const Vector fitted = basis_eval(basis, t) * c;
  Matrix design(80, 2);
  design.col(0).setOnes();
  design.col(1) = t;
  const Vector line = design.colPivHouseholderQr().solve(y);
  const Vector fitted_line = design.colPivHouseholderQr().solve(fitted);
  EXPECT_NEAR(fitted_line(0), line(0), 1e-3);
  EXPECT_NEAR(fitted_line(1), line(1), 1e-3);
  EXPECT_LT((fitted - design * fitted_line).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Smoothing, DefaultLambdaCloseToUnpenalised) {
  const Vector t = Vector::LinSpaced(100, 0.0, 1.0);
  const Vector y =
      ((2.0 * std::numbers::pi * t.array()).sin() + 0.5 * t.array().square()).matrix();
  SmoothSpec spec;
  spec.nbasis = 23;
  const auto basis = spec.basis_for(0.0, 1.0, 100);
  EXPECT_EQ(basis.nbasis, 23);
  const Matrix phi = basis_eval(basis, t);
  const Vector penalised = phi * smooth_curve(y, t, basis, spec);
  spec.lambda = 0.0;
  const Vector plain = phi * smooth_curve(y, t, basis, spec);
  EXPECT_LT((penalised - plain).norm() / plain.norm(), 0.01);
}

TEST(Smoothing, LinearInResponse) {
  std::mt19937_64 rng(7);
  const auto basis = BasisSystem::bspline(0.0, 1.0, 9, 4);
  const Vector t = random_grid(40, 0.0, 1.0, rng);
  const Vector y1 = normal_vector(40, rng), y2 = normal_vector(40, rng);
  SmoothSpec spec;
  spec.lambda = 0.01;
  const Vector sum = smooth_curve(Vector(y1 + y2), t, basis, spec);
  const Vector parts = smooth_curve(y1, t, basis, spec) + smooth_curve(y2, t, basis, spec);
  EXPECT_LT((sum - parts).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Smoothing, ResidualGrowsWithLambda) {
  std::mt19937_64 rng(8);
  const auto basis = BasisSystem::bspline(0.0, 1.0, 15, 4);
  const Vector t = Vector::LinSpaced(60, 0.0, 1.0);
  const Vector y = normal_vector(60, rng);
  const Matrix phi = basis_eval(basis, t);
  const Matrix pen = penalty_matrix(basis, Vector::Zero(2));
  double previous = 0.0;
  for (double lambda : {0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4}) {
    const double res = (y - phi * smooth_curve(y, t, basis, lambda, pen)).norm();
    EXPECT_GE(res, previous - 1e-12) << lambda;
    previous = res;
  }
}

TEST(Smoothing, Errors) {
  const auto basis = BasisSystem::bspline(0.0, 1.0, 10, 4);
  const Vector t = Vector::LinSpaced(5, 0.0, 1.0);
  EXPECT_THROW(smooth_curve(Vector::Zero(5), t, basis, 0.0, Matrix::Zero(10, 10)),
               NumericalError);
  EXPECT_THROW(basis_eval(basis, Vector::Constant(1, 1.5)), ValidationError);
  SmoothSpec spec;
  spec.lambda = -1.0;
  EXPECT_THROW(spec.validate(), ValidationError);
  SmoothSpec defaults;
  EXPECT_EQ(defaults.basis_for(0, 1, 50).nbasis, 10);
  EXPECT_EQ(defaults.basis_for(0, 1, 500).nbasis, 23);
  EXPECT_EQ(defaults.basis_for(0, 1, 12).nbasis, 6);
}
