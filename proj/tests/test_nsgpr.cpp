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
#include <limits>
#include <random>

#include "fungp/nsgpr.hpp"
#include "fungp/simulate.hpp"
#include "test_util.hpp"

using namespace fungp;
using fungp::testing::uniform_matrix;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

VaryingCoeffs constant_coeffs(Index q, double log_sigma, const Vector& rho, const Vector& angle,
                              double noise = kNegInf) {
  std::vector<int> tau;
  for (int i = 0; i < q; ++i) tau.push_back(i);
  return VaryingCoeffs::constant(q, tau, 5, Vector::Zero(q), Vector::Ones(q),
                                 std::vector<bool>(static_cast<size_t>(q), false), log_sigma, rho,
                                 angle, noise);
}

VaryingCoeffs random_coeffs(Index q, std::mt19937_64& rng, double spread = 0.5,
                            bool cyclic_first = false) {
  std::normal_distribution<double> z(0.0, spread);
  VaryingCoeffs c = constant_coeffs(q, 0.0, Vector::Constant(q, std::log(0.3)),
                                    Vector::Zero(q * (q - 1) / 2), std::log(0.05));
  c.cyclic[0] = cyclic_first;
  for (Index i = 0; i < c.log_sigma.size(); ++i) c.log_sigma(i) += z(rng);
  for (Index i = 0; i < c.log_radius.size(); ++i) c.log_radius.data()[i] += z(rng);
  for (Index i = 0; i < c.angle.size(); ++i) c.angle.data()[i] += 2.0 * z(rng);
  return c;
}

double rel_max(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST(NSQuadraticForm, Examples) {
  Matrix t1(1, 2), t2(1, 2);
  t1 << 0.0, 0.0;
  t2 << 1.0, 1.0;
  const auto identity = constant_coeffs(2, 0.0, Vector::Zero(2), Vector::Zero(1));
  EXPECT_NEAR(ns_quadratic_form(identity, t1, t2)(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(ns_quadratic_form(identity, t1, t1)(0, 0), 0.0, 1e-15);

  // With A = diag(4, 1) the form weights the squared distance by A itself.
  // The parametrised surface is A^{-1}; setting A^{-1} = diag(4, 1) gives 1/4.
  t1 << 1.0, 0.0;
  t2 << 0.0, 0.0;
  Vector rho(2);
  rho << std::log(0.5), 0.0;
  const auto a_diag = constant_coeffs(2, 0.0, rho, Vector::Zero(1));
  EXPECT_NEAR(ns_quadratic_form(a_diag, t1, t2)(0, 0), 4.0, 1e-12);
  rho << std::log(2.0), 0.0;
  const auto inv_diag = constant_coeffs(2, 0.0, rho, Vector::Zero(1));
  EXPECT_NEAR(ns_quadratic_form(inv_diag, t1, t2)(0, 0), 0.25, 1e-12);
}

TEST(NSQuadraticForm, MatchesDenseSolveAndIsSymmetric) {
  std::mt19937_64 rng(1);
  for (int draw = 0; draw < 20; ++draw) {
    const Index q = 2 + draw % 2;
    const auto c = random_coeffs(q, rng);
    const Matrix t1 = uniform_matrix(7, q, rng, 0.0, 1.0);
    const Matrix t2 = uniform_matrix(5, q, rng, 0.0, 1.0);
    const auto s1 = ns_anisotropy_inverse(c, t1);
    const auto s2 = ns_anisotropy_inverse(c, t2);
    const Matrix qf = ns_quadratic_form(c, t1, t2);
    for (Index i = 0; i < t1.rows(); ++i)
      for (Index j = 0; j < t2.rows(); ++j) {
        const Vector d = (t1.row(i) - t2.row(j)).transpose();
        const Matrix avg = 0.5 * (s1[static_cast<size_t>(i)] + s2[static_cast<size_t>(j)]);
        const double oracle = d.dot(avg.inverse() * d);
        EXPECT_NEAR(qf(i, j), oracle, 1e-12 * std::max(1.0, oracle));
        EXPECT_GE(qf(i, j), 0.0);
      }
    EXPECT_LT((qf - ns_quadratic_form(c, t2, t1).transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NSCov, ConstantCoefficientsReduceToStationaryKernel) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), gam(0.2, 2.0);
  for (int draw = 0; draw < 100; ++draw) {
    const Index q = 1 + draw % 2;
    const double log_sigma = 0.5 * u(rng);
    Vector rho(q);
    for (Index i = 0; i < q; ++i) rho(i) = u(rng) - 1.0;
    const auto c = constant_coeffs(q, log_sigma, rho, Vector::Zero(q * (q - 1) / 2), -1.0);
    NSCorrelation corr;
    KernelSpec spec;
    spec.input_dim = static_cast<int>(q);
    HyperParams hp{Vector(q + 2)};
    hp.values(0) = 2.0 * log_sigma;
    hp.values(q + 1) = -1.0;
    switch (draw % 3) {
      case 0:  // squared exponential
        corr.gamma = 2.0;
        spec.terms = {KernelFamily::PowEx};
        spec.gamma = 2.0;
        hp.values.segment(1, q) = -2.0 * rho;
        break;
      case 1:  // Matern 5/2
        corr.family = KernelFamily::Matern;
        corr.nu = 2.5;
        spec.terms = {KernelFamily::Matern};
        spec.nu = 2.5;
        hp.values.segment(1, q) = -2.0 * rho;
        break;
      default:  // general pow.ex exponent (one dimension only)
        if (q == 2) continue;
        corr.gamma = gam(rng);
        spec.terms = {KernelFamily::PowEx};
        spec.gamma = corr.gamma;
        hp.values(1) = -corr.gamma * rho(0);
    }
    const Matrix t = uniform_matrix(12, q, rng, -0.5, 1.5);
    EXPECT_LT(rel_max(ns_cov_matrix(corr, c, t, t, true), cov_matrix(spec, hp, t, t, true)), 1e-10)
        << "draw " << draw;
  }
}

TEST(NSCov, DiagonalIsSignalVariance) {
  std::mt19937_64 rng(3);
  const auto c = random_coeffs(2, rng);
  const Matrix t = uniform_matrix(15, 2, rng, 0.0, 1.0);
  const Vector sigma = ns_sigma(c, t);
  const Matrix k = ns_cov_matrix({}, c, t, t, false);
  EXPECT_LT((k.diagonal() - sigma.array().square().matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE((sigma.array() > 0.0).all());
}

TEST(NSCov, PositiveSemidefiniteOverRandomDraws) {
  std::mt19937_64 rng(4);
  for (int draw = 0; draw < 50; ++draw) {
    const Index q = 1 + draw % 3;
    const auto c = random_coeffs(q, rng, 0.8, draw % 2 == 1);
    NSCorrelation corr;
    if (draw % 4 == 3) {
      corr.family = KernelFamily::Matern;
      corr.nu = 1.5;
    } else {
      corr.gamma = 0.5 + 1.5 * static_cast<double>(draw % 4) / 3.0;
    }
    const Matrix t = uniform_matrix(25, q, rng, 0.0, 1.0);
    const Matrix k = ns_cov_matrix(corr, c, t, t, false);
    EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GE(min_eigenvalue(k), -1e-8 * k.trace() / 25.0) << "draw " << draw;
  }
}

TEST(NSCov, SeparableOptionGivesDiagonalAnisotropy) {
  std::mt19937_64 rng(5);
  auto c = random_coeffs(3, rng);
  c.flags.sep_cov = true;
  const Matrix t = uniform_matrix(100, 3, rng, 0.0, 1.0);
  for (const auto& s : ns_anisotropy_inverse(c, t)) {
    Matrix off = s;
    off.diagonal().setZero();
    EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(s.diagonal().minCoeff(), 0.0);
  }
  c.flags.sep_cov = false;
  for (const auto& s : ns_anisotropy_inverse(c, t)) EXPECT_GT(min_eigenvalue(s), 0.0);
}

TEST(NSCov, CyclicCoordinateMatchesAtEndpoints) {
  std::mt19937_64 rng(6);
  const auto c = random_coeffs(2, rng, 0.8, true);
  Matrix ends(2, 2);
  ends << 0.0, 0.3, 1.0, 0.3;
  const Vector sigma = ns_sigma(c, ends);
  EXPECT_NEAR(sigma(0), sigma(1), 1e-10);
  const auto s = ns_anisotropy_inverse(c, ends);
  EXPECT_LT((s[0] - s[1]).cwiseAbs().maxCoeff(), 1e-10);
  // Kernel values between points on the two boundary lines agree.
  Matrix a(2, 2), b(2, 2);
  a << 0.0, 0.1, 0.0, 0.7;
  b << 1.0, 0.1, 1.0, 0.7;
  EXPECT_LT((ns_cov_matrix({}, c, a, a, false) - ns_cov_matrix({}, c, b, b, false))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  // Without the cyclic flag the endpoints are free.
  auto open = c;
  open.cyclic[0] = false;
  EXPECT_GT(std::abs(ns_sigma(open, ends)(0) - ns_sigma(open, ends)(1)), 1e-6);
}

TEST(NSCov, RejectsInvalidCoefficients) {
  auto c = constant_coeffs(2, 0.0, Vector::Zero(2), Vector::Zero(1));
  const Matrix t = Matrix::Zero(2, 2);
  auto bad = c;
  bad.nbasis = 3;
  EXPECT_THROW(ns_cov_matrix({}, bad, t, t, false), ValidationError);
  bad = c;
  bad.which_tau = {0, 0};
  EXPECT_THROW(ns_cov_matrix({}, bad, t, t, false), ValidationError);
  bad = c;
  bad.log_sigma.resize(3);
  EXPECT_THROW(ns_cov_matrix({}, bad, t, t, false), ValidationError);
  EXPECT_THROW(ns_cov_matrix({}, c, Matrix::Zero(2, 3), t, false), ValidationError);
  NSCorrelation corr;
  corr.family = KernelFamily::Linear;
  EXPECT_THROW(ns_cov_matrix(corr, c, t, t, false), ValidationError);
}

TEST(NSPack, RoundTripsAndHonoursFlags) {
  std::mt19937_64 rng(7);
  auto c = random_coeffs(2, rng);
  const Index k = c.surface_size();
  EXPECT_EQ(ns_pack(c).size(), k * 4 + 1);
  VaryingCoeffs copy = c;
  copy.log_sigma.setZero();
  ns_unpack(copy, ns_pack(c));
  EXPECT_EQ(copy.log_sigma, c.log_sigma);
  EXPECT_EQ(copy.angle, c.angle);
  c.flags = {true, true, true};
  EXPECT_EQ(ns_pack(c).size(), k * 2);
  EXPECT_THROW(ns_unpack(c, Vector::Zero(k * 2 + 1)), ValidationError);
}

TEST(NSPredict, ConstantModelMatchesStationaryPredict) {
  std::mt19937_64 rng(8);
  const Matrix t = uniform_matrix(20, 2, rng, 0.0, 1.0);
  Vector rho(2);
  rho << std::log(0.3), std::log(0.5);
  const auto c = constant_coeffs(2, 0.2, rho, Vector::Zero(1), std::log(0.01));
  KernelSpec spec;
  spec.terms = {KernelFamily::PowEx};
  spec.input_dim = 2;
  HyperParams hp{Vector(4)};
  hp.values << 0.4, -2.0 * rho(0), -2.0 * rho(1), std::log(0.01);
  const auto sample = simulate_gp(spec, hp, t, 2, Vector(), 11);
  const Dataset data = Dataset::shared(t, sample.responses);
  const NSGPRModel ns({}, c, MeanModel{}, data);
  const GPModel gp(spec, hp, MeanModel{}, data);
  const Matrix tstar = uniform_matrix(15, 2, rng, -0.2, 1.2);
  for (bool noise_free : {false, true}) {
    PredictOptions po;
    po.noise_free = noise_free;
    po.realization = 1;
    const auto a = nsgpr_predict(ns, tstar, noise_free, 1);
    const auto b = predict(gp, tstar, po);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((a.sd - b.sd).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_NEAR(ns_log_likelihood({}, c, data, MeanModel{}),
              log_marginal_likelihood(spec, hp, data, MeanModel{}), 1e-8);
}

TEST(NSPredict, ZeroNoiseInterpolatesAndNoiseGapIsExact) {
  std::mt19937_64 rng(9);
  auto c = random_coeffs(1, rng);
  c.flags.zero_noise_variance = true;
  NSCorrelation corr;
  corr.family = KernelFamily::Matern;
  corr.nu = 1.5;
  const Matrix t = uniform_matrix(20, 1, rng, 0.0, 1.0);
  const Vector y = (3.0 * t.col(0).array()).sin().matrix();
  const NSGPRModel model(corr, c, MeanModel{}, Dataset::shared(t, y));
  const auto p = nsgpr_predict(model, t, true);
  EXPECT_LT((p.mean - y).cwiseAbs().maxCoeff(), 1e-6);

  c.flags.zero_noise_variance = false;
  c.noise_log_var = std::log(0.3);
  const NSGPRModel noisy(corr, c, MeanModel{}, Dataset::shared(t, y));
  const Matrix tstar = uniform_matrix(9, 1, rng, 0.0, 1.0);
  const auto with = nsgpr_predict(noisy, tstar, false);
  const auto without = nsgpr_predict(noisy, tstar, true);
  const Vector gap = with.sd.array().square() - without.sd.array().square();
  EXPECT_LT((gap.array() - 0.3).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(with.mean, without.mean);
}

TEST(NSFit, StationaryDataGivesFlatSignalSurface) {
  KernelSpec spec;
  spec.terms = {KernelFamily::PowEx};
  HyperParams hp{Vector(3)};
  hp.values << 0.0, std::log(20.0), std::log(0.01);
  const Matrix t = Vector::LinSpaced(40, 0.0, 1.0);
  const auto sample = simulate_gp(spec, hp, t, 6, Vector(), 2024);
  NSFitOptions options;
  options.nbasis = 5;
  options.seed = 3;
  const auto model = nsgpr_fit(Dataset::shared(t, sample.responses), options);
  EXPECT_TRUE(model.report().converged);
  const Vector sigma = ns_sigma(model.coeffs(), Vector::LinSpaced(101, 0.0, 1.0));
  const double mean = sigma.mean();
  const double sd = std::sqrt((sigma.array() - mean).square().mean());
  EXPECT_LT(sd / mean, 0.2);
  EXPECT_GT(model.report().log_likelihood, model.report().initial_log_likelihood);
}

TEST(NSFit, FlagsRemoveParameters) {
  KernelSpec spec;
  spec.terms = {KernelFamily::PowEx};
  spec.gamma = 1.0;
  HyperParams hp{Vector(3)};
  hp.values << 0.0, std::log(5.0), kNegInf;
  const Matrix t = Vector::LinSpaced(15, 0.0, 1.0);
  const auto sample = simulate_gp(spec, hp, t, 2, Vector(), 5);
  NSFitOptions options;
  options.nbasis = 4;
  options.restarts = 2;
  options.corr.gamma = 1.0;
  options.flags.zero_noise_variance = true;
  options.flags.unit_signal_variance = true;
  const auto model = nsgpr_fit(Dataset::shared(t, sample.responses), options);
  EXPECT_EQ(std::exp(model.coeffs().noise_log_var), 0.0);
  EXPECT_LT((ns_sigma(model.coeffs(), t).array() - 1.0).abs().maxCoeff(), 1e-15);
  const auto a = nsgpr_predict(model, t, false), b = nsgpr_predict(model, t, true);
  EXPECT_EQ(a.sd, b.sd);
}

TEST(NSFit, RejectsBadOptions) {
  const Matrix t = Vector::LinSpaced(10, 0.0, 1.0);
  const Dataset data = Dataset::shared(t, t.col(0));
  NSFitOptions options;
  options.nbasis = 3;
  EXPECT_THROW(nsgpr_fit(data, options), ValidationError);
  options.nbasis = 5;
  options.which_tau = {1};
  EXPECT_THROW(nsgpr_fit(data, options), ValidationError);
  const Dataset wide = Dataset::shared(Matrix::Random(10, 4), t.col(0));
  EXPECT_THROW(nsgpr_fit(wide, {}), ValidationError);
}
