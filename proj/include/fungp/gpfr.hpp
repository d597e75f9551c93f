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

#include <optional>
#include <string>
#include <vector>

#include "fungp/fr.hpp"
#include "fungp/gpr.hpp"

namespace fungp {

/// Training curves for GP functional regression. `fx` holds functional
/// covariates entering the mean, `gpx` functional covariates entering the
/// GP, both as [covariate][curve] vectors on the curve grids.
struct GPFRData {
  std::vector<Vector> t;
  std::vector<Vector> y;
  Matrix u;  // M x p scalar covariates
  std::vector<std::vector<Vector>> fx;
  std::vector<std::vector<Vector>> gpx;

  Index curves() const { return static_cast<Index>(y.size()); }
  FRData mean_part() const;
};

struct GPFROptions {
  FROptions fr;
  KernelSpec kernel;      // input_dim is set from the GP inputs
  bool gp_time = false;   // include t as a GP input (before gpx columns)
  FitOptions fit;
  std::optional<HyperParams> fixed;  // skip optimisation and use these
  bool fitting = false;   // keep in-sample fitted values
};

struct GPFRModel {
  FRModel fr;
  GPModel gp;  // ragged dataset: one realization of residuals per curve
  GPFRData train;
  bool gp_time = false;
  std::vector<Vector> residuals;
  std::vector<Vector> fitted_mean;  // empty unless fitting
  std::vector<Vector> fitted_sd;    // noise-free sd of the fitted curve

  Index gp_input_dim() const;
  /// GP input rows [t, gpx_1, ..] for a grid.
  Matrix gp_inputs(const Vector& t, const std::vector<Vector>& gpx) const;
};

GPFRModel gpfr_fit(const GPFRData& data, const GPFROptions& options);

/// Observed part of a new curve for Type I prediction.
struct NewCurve {
  Vector t;
  Vector y;
  std::vector<Vector> fx;
  std::vector<Vector> gpx;
};

/// Covariates of the new curve at the prediction grid.
struct PredictionCovariates {
  Vector u;
  std::vector<Vector> fx;
  std::vector<Vector> gpx;
};

enum class PredictionType { TypeI, TypeII, MeanOnly };
const char* prediction_type_name(PredictionType type);

struct GPFRPrediction {
  PredictionResult result;
  PredictionType type = PredictionType::TypeI;
  Vector mean_part;          // FR mean at t*
  Matrix component_mean;     // n* x M (Type II)
  Matrix component_variance; // n* x M (Type II)
};

GPFRPrediction gpfr_predict_type1(const GPFRModel& model, const NewCurve& observed,
                                  const Vector& tstar, const PredictionCovariates& cov,
                                  bool noise_free = false);

/// Equal-weight mixture over the training curves; with mean_only the FR mean
/// is returned with the GP prior variance.
GPFRPrediction gpfr_predict_type2(const GPFRModel& model, const Vector& tstar,
                                  const PredictionCovariates& cov, bool noise_free = false,
                                  bool mean_only = false);

/// Mixture moments: mean = sum w_m mu_m, var = sum w_m s2_m + sum w_m mu_m^2
/// - mean^2, row by row.
void mixture_moments(const Matrix& means, const Matrix& variances, const Vector& weights,
                     Vector& mean, Vector& variance);

}  // namespace fungp
