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

#include "fungp/fr.hpp"

#include <algorithm>
#include <limits>

namespace fungp {

void FRData::validate() const {
  const Index m = curves();
  require(m >= 1, "functional regression: at least one curve required");
  require(static_cast<Index>(t.size()) == m, "functional regression: one grid per curve");
  require(u.rows() == m, "functional regression: scalar covariates need one row per curve");
  require(u.allFinite(), "functional regression: scalar covariates must be finite");
  for (Index i = 0; i < m; ++i) {
    const auto s = static_cast<size_t>(i);
    require(t[s].size() == y[s].size() && t[s].size() >= 1,
            "functional regression: curve " + std::to_string(i) +
                " grid and responses differ in length");
    require(t[s].allFinite() && y[s].allFinite(),
            "functional regression: non-finite values in curve " + std::to_string(i));
  }
  for (size_t k = 0; k < x.size(); ++k) {
    require(static_cast<Index>(x[k].size()) == m,
            "functional regression: functional covariate " + std::to_string(k) +
                " needs one curve per response");
    for (Index i = 0; i < m; ++i) {
      const auto s = static_cast<size_t>(i);
      require(x[k][s].size() == t[s].size() && x[k][s].allFinite(),
              "functional regression: functional covariate " + std::to_string(k) +
                  " does not match the grid of curve " + std::to_string(i));
    }
  }
}

namespace {

// Least squares for the functional-covariate coefficients given residuals r
// stacked over curves. Returns the fitted functional part per curve.
std::vector<Vector> fit_functional(const FRData& data, const FROptions& options,
                                   const Vector& r, FRModel& model) {
  const Index m = data.curves();
  const Index k = data.functional_covariates();
  const Index total = r.size();
  std::vector<Vector> part(static_cast<size_t>(m));
  if (!options.concurrent) {
    Matrix z(total, k);
    for (Index c = 0; c < k; ++c) {
      Index at = 0;
      for (Index i = 0; i < m; ++i) {
        const auto& xv = data.x[static_cast<size_t>(c)][static_cast<size_t>(i)];
        z.col(c).segment(at, xv.size()) = xv;
        at += xv.size();
      }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    require(qr.rank() == k, "functional regression: functional covariates are collinear");
    model.alpha = qr.solve(r);
    model.alpha_coef = Matrix::Zero(0, k);
    Index at = 0;
    for (Index i = 0; i < m; ++i) {
      const Index n = data.y[static_cast<size_t>(i)].size();
      part[static_cast<size_t>(i)] = z.block(at, 0, n, k) * model.alpha;
      at += n;
    }
    return part;
  }
  const Index ha = model.alpha_basis.nbasis;
  Matrix z(total, k * ha);
  Index at = 0;
  for (Index i = 0; i < m; ++i) {
    const auto s = static_cast<size_t>(i);
    const Matrix phi = basis_eval(model.alpha_basis, data.t[s]);
    for (Index c = 0; c < k; ++c)
      z.block(at, c * ha, phi.rows(), ha) = data.x[static_cast<size_t>(c)][s].asDiagonal() * phi;
    at += phi.rows();
  }
  Matrix normal = z.transpose() * z;
  if (options.coefficient.lambda > 0.0) {
    const Matrix pen = penalty_matrix(model.alpha_basis, options.coefficient.pen);
    for (Index c = 0; c < k; ++c)
      normal.block(c * ha, c * ha, ha, ha) += options.coefficient.lambda * pen;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(normal);
  if (qr.rank() < normal.rows())
    throw NumericalError("functional regression: singular system for concurrent coefficients");
  const Vector coef = qr.solve(Vector(z.transpose() * r));
  model.alpha_coef = Eigen::Map<const Matrix>(coef.data(), ha, k);
  model.alpha = Vector::Zero(0);
  at = 0;
  for (Index i = 0; i < m; ++i) {
    const Index n = data.y[static_cast<size_t>(i)].size();
    part[static_cast<size_t>(i)] = z.middleRows(at, n) * coef;
    at += n;
  }
  return part;
}

}  // namespace

FRModel fr_fit(const FRData& data, const FROptions& options) {
  data.validate();
  const Index m = data.curves();
  const Index p = data.scalar_covariates();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  Index longest = 0;
  for (const auto& t : data.t) {
    lo = std::min(lo, t.minCoeff());
    hi = std::max(hi, t.maxCoeff());
    longest = std::max(longest, t.size());
  }
  require(hi > lo, "functional regression: curves must span a non-degenerate range");
  if (p > 0) {
    require(m >= p, "functional regression: need at least as many curves as scalar covariates");
    Eigen::ColPivHouseholderQR<Matrix> qr(data.u);
    require(qr.rank() == p, "functional regression: scalar covariate matrix is rank deficient");
  }

  FRModel model;
  model.concurrent = options.concurrent;
  model.basis = options.response.basis_for(lo, hi, longest);
  const Index h = model.basis.nbasis;
  const Index k = data.functional_covariates();
  if (k > 0 && options.concurrent)
    model.alpha_basis = options.coefficient.basis_for(lo, hi, longest);
  model.alpha = Vector::Zero(k > 0 && !options.concurrent ? k : 0);
  model.alpha_coef = Matrix::Zero(0, 0);

  const Matrix pen = options.response.lambda > 0.0
                         ? penalty_matrix(model.basis, options.response.pen)
                         : Matrix::Zero(h, h);
  std::vector<Matrix> phi;
  for (const auto& t : data.t) phi.push_back(basis_eval(model.basis, t));

  // Backfitting: smooth the responses net of the functional part, regress the
  // coefficients on u, then refit the functional part to what remains. With no
  // functional covariates one pass gives the plain estimators.
  std::vector<Vector> functional(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i)
    functional[static_cast<size_t>(i)] = Vector::Zero(data.y[static_cast<size_t>(i)].size());
  Index total = 0;
  for (const auto& y : data.y) total += y.size();
  double scale = 0.0;
  for (const auto& y : data.y) scale = std::max(scale, y.cwiseAbs().maxCoeff());
  const int max_sweeps = k > 0 ? 500 : 1;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    model.a.resize(m, h);
    for (Index i = 0; i < m; ++i) {
      const auto s = static_cast<size_t>(i);
      model.a.row(i) = smooth_curve(Vector(data.y[s] - functional[s]), data.t[s], model.basis,
                                    options.response.lambda, pen)
                           .transpose();
    }
    model.b = Matrix::Zero(h, p);
    // B' = (U'U)^{-1} U' A
    if (p > 0) model.b = data.u.colPivHouseholderQr().solve(model.a).transpose();
    if (k == 0) break;

    Vector r(total);
    Index at = 0;
    for (Index i = 0; i < m; ++i) {
      const auto s = static_cast<size_t>(i);
      const Vector scalar_part = phi[s] * (model.b * data.u.row(i).transpose());
      r.segment(at, data.y[s].size()) = data.y[s] - scalar_part;
      at += data.y[s].size();
    }
    auto updated = fit_functional(data, options, r, model);
    double change = 0.0;
    for (Index i = 0; i < m; ++i) {
      const auto s = static_cast<size_t>(i);
      change = std::max(change, (updated[s] - functional[s]).cwiseAbs().maxCoeff());
    }
    functional = std::move(updated);
    if (change <= 1e-12 * std::max(scale, 1.0)) {
      // Final smoothing pass consistent with the converged functional part.
      for (Index i = 0; i < m; ++i) {
        const auto s = static_cast<size_t>(i);
        model.a.row(i) = smooth_curve(Vector(data.y[s] - functional[s]), data.t[s], model.basis,
                                      options.response.lambda, pen)
                             .transpose();
      }
      if (p > 0) model.b = data.u.colPivHouseholderQr().solve(model.a).transpose();
      break;
    }
  }
  return model;
}

Matrix fr_beta(const FRModel& model, const Vector& t) {
  return basis_eval(model.basis, t) * model.b;
}

Matrix fr_alpha(const FRModel& model, const Vector& t) {
  if (!model.concurrent) return Matrix::Ones(t.size(), 1) * model.alpha.transpose();
  if (model.alpha_coef.cols() == 0) return Matrix::Zero(t.size(), 0);
  return basis_eval(model.alpha_basis, t) * model.alpha_coef;
}

Vector fr_mean_eval(const FRModel& model, const Vector& ustar,
                    const std::vector<Vector>& xstar, const Vector& t) {
  require(ustar.size() == model.scalar_covariates(),
          "fr_mean_eval: expected " + std::to_string(model.scalar_covariates()) +
              " scalar covariates");
  const Index k = model.functional_covariates();
  require(static_cast<Index>(xstar.size()) == k,
          "fr_mean_eval: expected " + std::to_string(k) + " functional covariates");
  Vector mean = Vector::Zero(t.size());
  if (ustar.size() > 0) mean = fr_beta(model, t) * ustar;
  if (k > 0) {
    const Matrix alpha = fr_alpha(model, t);
    for (Index c = 0; c < k; ++c) {
      const auto& xv = xstar[static_cast<size_t>(c)];
      require(xv.size() == t.size(), "fr_mean_eval: functional covariate length mismatch");
      mean += alpha.col(c).cwiseProduct(xv);
    }
  }
  return mean;
}

}  // namespace fungp
