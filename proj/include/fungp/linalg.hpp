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

#include <Eigen/Cholesky>

#include "fungp/common.hpp"

namespace fungp {

/// Cholesky factor of a covariance matrix, with the jitter that was needed to
/// obtain it. On failure the diagonal is inflated by 1e-10 * trace / n,
/// escalating by 10x at most three times before giving up.
class CovFactor {
 public:
  CovFactor() = default;
  explicit CovFactor(const Matrix& psi);

  Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }
  double log_det() const;
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  Vector solve(const Vector& b) const { return llt_.solve(b); }
  /// L^{-1} b, for variance terms ||L^{-1} k||^2.
  Matrix half_solve(const Matrix& b) const;
  Matrix inverse() const;
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

}  // namespace fungp
