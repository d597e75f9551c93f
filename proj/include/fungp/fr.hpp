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

#include <vector>

#include "fungp/basis.hpp"
#include "fungp/common.hpp"

namespace fungp {

/// M response curves, each on its own grid, with p scalar covariates per
/// curve and K functional covariates observed on the same grids.
struct FRData {
  std::vector<Vector> t;              // t[m]: n_m grid of curve m
  std::vector<Vector> y;              // y[m]: responses of curve m
  Matrix u;                           // M x p
  std::vector<std::vector<Vector>> x; // x[k][m]: covariate k on t[m]

  Index curves() const { return static_cast<Index>(y.size()); }
  Index scalar_covariates() const { return u.cols(); }
  Index functional_covariates() const { return static_cast<Index>(x.size()); }
  void validate() const;
};

struct FROptions {
  SmoothSpec response;    // basis and penalty for the curves and beta(t)
  SmoothSpec coefficient; // basis and penalty for alpha(t) (concurrent)
  bool concurrent = true;
};

/// Functional regression mean u' beta(t) + sum_k alpha_k(t) x_k(t), with
/// beta(t) = B' Phi(t). Non-concurrent covariates use a constant alpha_k.
struct FRModel {
  BasisSystem basis;
  Matrix a;  // M x H per-curve coefficients
  Matrix b;  // H x p
  bool concurrent = true;
  Vector alpha;  // K scalars (non-concurrent)
  BasisSystem alpha_basis;
  Matrix alpha_coef;  // H_alpha x K (concurrent)

  Index scalar_covariates() const { return b.cols(); }
  Index functional_covariates() const {
    return concurrent ? alpha_coef.cols() : alpha.size();
  }
};

/// Smooths every curve, regresses the coefficients on u, then fits the
/// functional-covariate coefficients to the remaining residuals.
FRModel fr_fit(const FRData& data, const FROptions& options = {});

/// beta(t) as an n x p matrix.
Matrix fr_beta(const FRModel& model, const Vector& t);

/// alpha_k(t) as an n x K matrix (constant columns when non-concurrent).
Matrix fr_alpha(const FRModel& model, const Vector& t);

/// Mean curve for covariates u* (length p) and functional covariate values
/// x*[k] on t.
Vector fr_mean_eval(const FRModel& model, const Vector& ustar,
                    const std::vector<Vector>& xstar, const Vector& t);

}  // namespace fungp
