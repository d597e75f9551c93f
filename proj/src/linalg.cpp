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

#include "fungp/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace fungp {

CovFactor::CovFactor(const Matrix& psi) {
  require(psi.rows() == psi.cols(), "covariance matrix must be square");
  require(psi.allFinite(), "covariance matrix has non-finite entries");
  llt_.compute(psi);
  if (llt_.info() == Eigen::Success) return;
  const double n = static_cast<double>(psi.rows());
  double jitter = 1e-10 * std::max(psi.trace() / n, 1e-300);
  for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
    Matrix inflated = psi;
    inflated.diagonal().array() += jitter;
    llt_.compute(inflated);
    if (llt_.info() == Eigen::Success) {
      jitter_ = jitter;
      return;
    }
  }
  throw NumericalError("covariance matrix is not positive definite after jitter");
}

double CovFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix CovFactor::half_solve(const Matrix& b) const {
  return llt_.matrixL().solve(b);
}

Matrix CovFactor::inverse() const {
  return llt_.solve(Matrix::Identity(size(), size()));
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace fungp
