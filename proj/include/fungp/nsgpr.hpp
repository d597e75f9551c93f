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
#include <vector>

#include "fungp/gpr.hpp"

namespace fungp {

/// Isotropic correlation g(r) used inside the nonstationary kernel.
struct NSCorrelation {
  KernelFamily family = KernelFamily::PowEx;  // PowEx: exp(-r^gamma); Matern
  double gamma = 2.0;
  double nu = 1.5;
  void validate() const;
};

struct NSFlags {
  bool unit_signal_variance = false;  // sigma(t) = 1
  bool zero_noise_variance = false;   // noise variance = 0
  bool sep_cov = false;               // A(t) diagonal
};

/// Spatially varying parameters of the nonstationary kernel. Every surface is
/// a tensor-product cubic B-spline over the `which_tau` coordinates (rescaled
/// to [0, 1] with `lo`/`hi`), with `nbasis` functions per coordinate.
///
/// Sigma(t) = A^{-1}(t) = L L' where L = diag(exp(rho(t))) U(t) and the rows
/// of U are unit vectors given by angles phi = pi / (1 + exp(-a(t))). Angles
/// are ordered row by row: (2,1), (3,1), (3,2).
struct VaryingCoeffs {
  Index input_dim = 1;
  std::vector<int> which_tau;  // 0-based coordinates
  int nbasis = 5;
  std::vector<bool> cyclic;    // per which_tau entry
  Vector lo, hi;               // per which_tau entry
  Vector log_sigma;            // K: log sigma(t)
  Matrix log_radius;           // K x Q: rho_q(t)
  Matrix angle;                // K x Q(Q-1)/2: a(t)
  double noise_log_var = 0.0;  // -inf when zero_noise_variance
  NSFlags flags;

  Index surface_size() const;
  void validate() const;
  /// n x K tensor basis rows at the rows of t.
  Matrix basis(const Matrix& t) const;
  /// Constant surfaces: every coefficient of a surface takes the same value.
  static VaryingCoeffs constant(Index input_dim, std::vector<int> which_tau, int nbasis,
                                Vector lo, Vector hi, std::vector<bool> cyclic,
                                double log_sigma, const Vector& log_radius,
                                const Vector& angle, double noise_log_var);
};

/// sigma(t) at each row.
Vector ns_sigma(const VaryingCoeffs& c, const Matrix& t);
/// A^{-1}(t) at each row.
std::vector<Matrix> ns_anisotropy_inverse(const VaryingCoeffs& c, const Matrix& t);

/// Q_tt' = (t - t')' ((A^{-1}(t) + A^{-1}(t'))/2)^{-1} (t - t').
Matrix ns_quadratic_form(const VaryingCoeffs& c, const Matrix& t1, const Matrix& t2);

/// k(t, t') = sigma(t) sigma(t') |A(t)|^{-1/4} |A(t')|^{-1/4}
///            |(A^{-1}(t) + A^{-1}(t'))/2|^{-1/2} g(sqrt(Q_tt')),
/// plus the noise variance where rows coincide (if add_noise).
Matrix ns_cov_matrix(const NSCorrelation& corr, const VaryingCoeffs& c, const Matrix& t1,
                     const Matrix& t2, bool add_noise);

/// Free parameters in optimizer order: log_sigma (unless unit signal),
/// log_radius columns, angle columns (unless sep_cov), noise (unless zero).
Vector ns_pack(const VaryingCoeffs& c);
void ns_unpack(VaryingCoeffs& c, const Vector& free);

double ns_log_likelihood(const NSCorrelation& corr, const VaryingCoeffs& c, const Dataset& data,
                         const MeanModel& mean);

struct NSFitOptions {
  NSCorrelation corr;
  std::vector<int> which_tau;  // empty = all coordinates
  int nbasis = 5;
  std::vector<bool> cyclic;    // empty = none
  NSFlags flags;
  MeanKind mean = MeanKind::Zero;
  int restarts = 3;
  std::uint64_t seed = 0;
  OptimizerOptions optimizer;
};

class NSGPRModel {
 public:
  NSGPRModel() = default;
  NSGPRModel(NSCorrelation corr, VaryingCoeffs coeffs, MeanModel mean, Dataset train,
             FitReport report = {});
  const NSCorrelation& corr() const { return corr_; }
  const VaryingCoeffs& coeffs() const { return coeffs_; }
  const MeanModel& mean() const { return mean_; }
  const Dataset& train() const { return train_; }
  const FitReport& report() const { return report_; }
  const CovFactor& factor(Index realization) const;
  Vector alpha(Index realization) const;

 private:
  NSCorrelation corr_;
  VaryingCoeffs coeffs_;
  MeanModel mean_;
  Dataset train_;
  FitReport report_;
  std::vector<CovFactor> factors_;
  std::vector<Vector> alphas_;
};

/// Maximum likelihood over all free spline coefficients and the noise, by
/// multi-start BFGS with central-difference gradients. Q <= 3.
NSGPRModel nsgpr_fit(const Dataset& data, const NSFitOptions& options = {});

PredictionResult nsgpr_predict(const NSGPRModel& model, const Matrix& tstar,
                               bool noise_free = false, Index realization = 0);

}  // namespace fungp
