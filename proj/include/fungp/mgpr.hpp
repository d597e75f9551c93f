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

#include "fungp/gpr.hpp"

namespace fungp {

/// p outputs over a shared Q-dimensional domain. Output j has its own grid
/// (n_j x Q) and an n_j x M response matrix; M is common to all outputs.
struct MultiDataset {
  std::vector<Matrix> inputs;
  std::vector<Matrix> responses;

  Index outputs() const { return static_cast<Index>(inputs.size()); }
  Index realizations() const;
  Index input_dim() const;
  Index total_rows() const;
  void validate() const;
};

/// Log-scale parameters of the convolution model. Output j is the sum of a
/// shared white-noise process smoothed by g_j(u) = c_j exp(-u' B_j u / 2) and
/// an own white-noise process smoothed by k_j(u) = v_j exp(-u' A_j u / 2),
/// plus noise. A_j and B_j are diagonal precisions. Layout per output:
///   {log c_j, log B_j (Q), log v_j, log A_j (Q), log noise_j}.
/// log c_j = -inf switches the shared process off for output j;
/// log noise_j = -inf means noise-free.
struct MGPRHyper {
  Index outputs = 2;
  Index input_dim = 1;
  Vector values;

  static Index size(Index outputs, Index input_dim) { return outputs * (3 + 2 * input_dim); }
  static MGPRHyper zeros(Index outputs, Index input_dim);
  Index block() const { return 3 + 2 * input_dim; }
  Index offset(Index j) const { return j * block(); }
  double log_shared_scale(Index j) const { return values(offset(j)); }
  Vector log_shared_precision(Index j) const { return values.segment(offset(j) + 1, input_dim); }
  double log_own_scale(Index j) const { return values(offset(j) + 1 + input_dim); }
  Vector log_own_precision(Index j) const { return values.segment(offset(j) + 2 + input_dim, input_dim); }
  double noise_log_var(Index j) const { return values(offset(j) + block() - 1); }
  double& noise_log_var(Index j) { return values(offset(j) + block() - 1); }
  std::vector<std::string> names() const;
  void validate() const;
};

/// Psi_ij(T_i, T_j); for i == j and add_noise, the noise variance of output i
/// is added on coincident rows.
Matrix cross_cov(const MGPRHyper& hp, Index i, Index j, const Matrix& ti, const Matrix& tj,
                 bool add_noise = false);

/// Output-major block matrix [Psi_ij(T_i, T_j)].
Matrix build_joint_cov(const MGPRHyper& hp, const std::vector<Matrix>& inputs,
                       bool add_noise = true);

/// d Psi / d theta_k for every entry of MGPRHyper::values.
std::vector<Matrix> joint_cov_grad(const MGPRHyper& hp, const std::vector<Matrix>& inputs);

double mgpr_log_likelihood(const MGPRHyper& hp, const MultiDataset& data,
                           const std::vector<MeanModel>& means);
Vector mgpr_log_lik_gradient(const MGPRHyper& hp, const MultiDataset& data,
                             const std::vector<MeanModel>& means);

struct MGPRFitOptions {
  std::optional<Index> subset_size;  // per output, seeded per output
  MeanKind mean = MeanKind::Zero;
  int restarts = 5;
  std::uint64_t seed = 0;
  bool use_gradient = true;
  OptimizerOptions optimizer;
};

class MGPRModel {
 public:
  MGPRModel() = default;
  MGPRModel(MGPRHyper hp, std::vector<MeanModel> means, MultiDataset train,
            FitReport report = {});
  const MGPRHyper& hyper() const { return hp_; }
  const std::vector<MeanModel>& means() const { return means_; }
  const MultiDataset& train() const { return train_; }
  const FitReport& report() const { return report_; }

 private:
  MGPRHyper hp_;
  std::vector<MeanModel> means_;
  MultiDataset train_;
  FitReport report_;
};

/// Per-output means are fitted first; then the joint likelihood summed over
/// realizations is maximised by multi-start BFGS with analytic gradients.
MGPRModel mgpr_fit(const MultiDataset& data, const MGPRFitOptions& options = {});

struct OutputObservations {
  Matrix inputs;    // n_j x Q, may be empty
  Vector response;  // n_j
};

/// Observations of training realization m, for every output.
std::vector<OutputObservations> mgpr_training_observations(const MGPRModel& model, Index m);

/// Joint conditional Gaussian at every tstar[j] given all observations.
/// Outputs with an empty tstar get an empty result.
std::vector<PredictionResult> mgpr_predict(const MGPRModel& model,
                                           const std::vector<OutputObservations>& obs,
                                           const std::vector<Matrix>& tstar,
                                           bool noise_free = false);

}  // namespace fungp
