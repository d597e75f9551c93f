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
#include <optional>
#include <string>
#include <vector>

#include "fungp/common.hpp"
#include "fungp/kernels.hpp"
#include "fungp/linalg.hpp"
#include "fungp/optimizer.hpp"

namespace fungp {

struct Realization {
  Matrix inputs;    // n_m x Q
  Vector response;  // n_m
};

/// One or more realizations of a response over Q-dimensional inputs, either
/// sharing one grid (n x M response matrix) or each on its own grid.
class Dataset {
 public:
  Dataset() = default;
  static Dataset shared(Matrix inputs, Matrix responses);
  static Dataset ragged(std::vector<Realization> realizations);

  bool shared_grid() const { return shared_; }
  Index realizations() const;
  Index input_dim() const;
  Index rows(Index m) const;
  const Matrix& inputs(Index m) const;
  Vector response(Index m) const;
  /// Shared-grid accessors.
  const Matrix& grid() const;
  const Matrix& responses() const;

  void validate() const;

 private:
  bool shared_ = true;
  Matrix grid_;
  Matrix responses_;
  std::vector<Realization> ragged_;
};

enum class MeanKind { Zero, Constant, Linear, Average, Explicit };

const char* mean_kind_name(MeanKind kind);
MeanKind parse_mean_kind(const std::string& name);

/// Mean function. Constant holds {c}; Linear holds {b_0, b_1..b_Q}.
/// Average and Explicit hold values on a reference grid.
struct MeanModel {
  MeanKind kind = MeanKind::Zero;
  Vector coefficients;
  Matrix grid;
  Vector values;
};

/// Fits the mean before the covariance. Explicit requires `explicit_values`
/// of length n on the shared grid.
MeanModel mean_fit(const Dataset& data, MeanKind kind,
                   const Vector* explicit_values = nullptr);

/// Average/Explicit means are looked up by exact row match on their grid; for
/// Q = 1 other points are linearly interpolated (constant beyond the ends).
Vector mean_eval(const MeanModel& mean, const Matrix& t);

double log_marginal_likelihood(const KernelSpec& spec, const HyperParams& hp,
                               const Dataset& data, const MeanModel& mean);

/// Analytic gradient via the trace formula. Throws UnsupportedGradient when
/// the kernel has no analytic derivatives.
Vector log_lik_gradient(const KernelSpec& spec, const HyperParams& hp,
                        const Dataset& data, const MeanModel& mean);

/// Diagonal of the Hessian of the log-likelihood.
Vector log_lik_hessian_diag(const KernelSpec& spec, const HyperParams& hp,
                            const Dataset& data, const MeanModel& mean);

struct FitOptions {
  std::optional<Index> subset_size;  // Subset of Data size m
  int restarts = 5;
  std::uint64_t seed = 0;
  bool use_gradient = true;
  std::optional<HyperParams> initial;  // tried as an extra first start
  OptimizerOptions optimizer;
};

struct RestartDiagnostics {
  Vector start;
  Vector end;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct FitReport {
  bool converged = false;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool analytic_gradient = true;
  double seconds = 0.0;
  std::vector<RestartDiagnostics> restarts;
};

/// Fitted univariate GP. Immutable; holds the factorization of Psi(theta_hat)
/// for each distinct training grid.
class GPModel {
 public:
  GPModel() = default;
  GPModel(KernelSpec spec, HyperParams hp, MeanModel mean, Dataset train,
          FitReport report = {});

  const KernelSpec& spec() const { return spec_; }
  const HyperParams& hyper() const { return hp_; }
  const MeanModel& mean() const { return mean_; }
  const Dataset& train() const { return train_; }
  const FitReport& report() const { return report_; }

  const CovFactor& factor(Index realization) const;
  /// Psi^{-1}(y_m - mu) for realization m.
  Vector alpha(Index realization) const;

 private:
  KernelSpec spec_;
  HyperParams hp_;
  MeanModel mean_;
  Dataset train_;
  FitReport report_;
  std::vector<CovFactor> factors_;
  Matrix alpha_;  // shared grid
  std::vector<Vector> ragged_alpha_;
};

GPModel fit(const Dataset& data, const KernelSpec& spec, const MeanModel& mean,
            const FitOptions& options = {});

/// Subset of Data: m rows drawn uniformly without replacement, kept in their
/// original order. Shared grids are subsampled jointly across realizations.
Dataset subset_of_data(const Dataset& data, Index m, std::uint64_t seed);

/// Sorted uniform sample of `m` distinct indices from [0, n).
std::vector<Index> sample_indices(Index n, Index m, std::uint64_t seed);

struct PredictionResult {
  Matrix grid;
  Vector mean;
  Vector sd;
  bool noise_free = false;
  std::vector<std::string> warnings;
};

struct PredictOptions {
  bool noise_free = false;
  std::optional<Index> regressor_size;  // Subset of Regressors size mSR
  std::uint64_t seed = 0;
  Index realization = 0;
};

PredictionResult predict(const GPModel& model, const Matrix& tstar,
                         const PredictOptions& options = {});

/// Conditional moments of a zero-mean GP at `tstar` given observations
/// `y` at `inputs`. Variance includes exp(noise) unless noise_free.
struct Conditional {
  Vector mean;
  Vector variance;
  Index clamped = 0;  // negative variances set to zero
};
Conditional gp_condition(const KernelSpec& spec, const HyperParams& hp,
                         const Matrix& inputs, const Vector& y,
                         const Matrix& tstar, bool noise_free);
Conditional gp_condition(const KernelSpec& spec, const HyperParams& hp,
                         const Matrix& inputs, const CovFactor& factor,
                         const Vector& alpha, const Matrix& tstar,
                         bool noise_free);

}  // namespace fungp
