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

#pragma once

#include <cstdint>
#include <random>

#include "fungp/fr.hpp"
#include "fungp/gpr.hpp"
#include "fungp/mgpr.hpp"

namespace fungp {

/// `count` zero-mean draws (columns) with covariance `cov`, via a symmetric
/// eigendecomposition so that singular covariances are handled.
Matrix sample_mvn(const Matrix& cov, Index count, std::mt19937_64& rng);

struct GPSample {
  Matrix inputs;     // n x Q
  Matrix latent;     // n x M mean plus noise-free process
  Matrix responses;  // latent plus noise
};

/// M realizations of mean + f + eps with f ~ GP(0, k(theta)) and
/// eps ~ N(0, exp(noise slot)).
GPSample simulate_gp(const KernelSpec& spec, const HyperParams& hp, const Matrix& inputs,
                     Index realizations, const Vector& mean, std::uint64_t seed);

/// Functional regression data y_m(t) = u_m0 beta_0(t) + u_m1 beta_1(t) +
/// tau_m(x_m(t)) + eps with beta_0 = 1, beta_1 = sin((t / 2)^3),
/// u_m0 ~ N(0, 1), u_m1 ~ N(10, 25), x_m(t) = exp(t) + N(0, 0.01), tau an
/// exponential-kernel GP on x and eps ~ N(0, 1). Training curves share an
/// n-point grid on [-4, 4]; the extra curve uses n_new points.
struct GPFRExample {
  FRData train;
  std::vector<Vector> train_latent;  // mean + tau per training curve
  Vector t_new;
  Vector x_new;
  Vector y_new;
  Vector latent_new;
  Vector u_new;
  KernelSpec kernel;
  HyperParams truth;
};

/// With include_tau = false the GP term is omitted (pure functional
/// regression data).
GPFRExample simulate_gpfr_example(std::uint64_t seed, Index curves = 20, Index n = 50,
                                  Index n_new = 60, bool include_tau = true);

struct MGPRSample {
  MultiDataset data;
  std::vector<Matrix> latent;  // per output, n_j x M (mean plus process)
  MGPRHyper truth;
  std::vector<Vector> mean_coefficients;  // per output {b_0, b_1}, empty if none
};

/// M joint draws from the convolution model, with optional per-output means
/// (empty vector for zero) added.
MGPRSample simulate_mgpr(const MGPRHyper& hp, const std::vector<Matrix>& inputs, Index realizations,
                         const std::vector<Vector>& means, std::uint64_t seed);

/// Trivariate example on n equally spaced points of [0, 1] with linear means
/// and fixed convolution parameters (see MGPRSample::truth).
MGPRSample simulate_mgpr_example(std::uint64_t seed, Index realizations = 30, Index n = 250);

double beta0_example(double t);
double beta1_example(double t);

}  // namespace fungp
