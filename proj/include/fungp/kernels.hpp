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

#include <string>
#include <string_view>
#include <vector>

#include "fungp/common.hpp"

namespace fungp {

enum class KernelFamily { Linear, PowEx, Matern, RatQu };

std::string_view family_name(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Sum of stationary/linear kernel families over a Q-dimensional input.
struct KernelSpec {
  std::vector<KernelFamily> terms;
  double gamma = 2.0;  // pow.ex exponent, (0, 2]
  double nu = 1.5;     // Matern smoothness, > 0
  int input_dim = 1;

  void validate() const;
  bool has(KernelFamily family) const;
  /// Analytic hyperparameter derivatives exist for every term.
  bool analytic_gradient() const;
};

/// Log-scale hyperparameter vector. Layout, per term in spec order:
///   linear  {a_0, a_1..a_Q}
///   pow.ex  {v, w_1..w_Q}
///   matern  {v, w_1..w_Q}
///   rat.qu  {v, w_1..w_Q, alpha}
/// followed by a single noise log-variance slot. The noise slot may be -inf,
/// which means noise-free observations.
struct HyperParams {
  Vector values;

  static HyperParams zeros(const KernelSpec& spec);
  double noise_log_var() const { return values(values.size() - 1); }
  double& noise_log_var() { return values(values.size() - 1); }
};

Index param_count(const KernelSpec& spec);
std::vector<std::string> param_names(const KernelSpec& spec);
/// Offset of each term's first parameter in HyperParams::values.
std::vector<Index> term_offsets(const KernelSpec& spec);
void validate_layout(const KernelSpec& spec, const HyperParams& hp);

/// d_(gamma)(i, j) = sum_q w_q |T1(i, q) - T2(j, q)|^gamma.
Matrix weighted_distance(const Vector& w, const Matrix& t1, const Matrix& t2,
                         double gamma);

/// Matern correlation 2^(1-nu)/Gamma(nu) z^nu K_nu(z) with z = sqrt(2 nu d),
/// as a function of the weighted squared distance d. Returns 1 at d = 0.
double matern_correlation(double d, double nu);

/// K(T1, T2) summed over the spec's terms. With add_noise, exp(noise slot) is
/// added wherever a row of T1 exactly equals a row of T2.
Matrix cov_matrix(const KernelSpec& spec, const HyperParams& hp,
                  const Matrix& t1, const Matrix& t2, bool add_noise);

/// k(t, t) for each row, excluding noise.
Vector cov_diagonal(const KernelSpec& spec, const HyperParams& hp,
                    const Matrix& t);

/// dPsi/dtheta_j for every hyperparameter (noise last). Throws
/// UnsupportedGradient for Matern with nu other than 3/2 or 5/2.
std::vector<Matrix> cov_grad(const KernelSpec& spec, const HyperParams& hp,
                             const Matrix& t);

/// Pure second derivatives d^2 Psi / d theta_j^2, same layout as cov_grad.
std::vector<Matrix> cov_second_deriv(const KernelSpec& spec,
                                     const HyperParams& hp, const Matrix& t);

/// Exact row-equality mask used by the noise indicator I{t = t'}.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> coincidence(
    const Matrix& t1, const Matrix& t2);

}  // namespace fungp
