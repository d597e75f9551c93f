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

#include "fungp/common.hpp"

namespace fungp {

enum class BasisKind { BSpline, Fourier };

/// Clamped B-spline basis with equally spaced interior knots, or a Fourier
/// basis (1, sin w x, cos w x, sin 2w x, ...) with w = 2 pi / period and
/// x = t - lo.
struct BasisSystem {
  BasisKind kind = BasisKind::BSpline;
  Index nbasis = 0;
  int norder = 6;  // B-spline order (degree + 1)
  double lo = 0.0;
  double hi = 1.0;
  double period = 1.0;

  static BasisSystem bspline(double lo, double hi, Index nbasis, int norder = 6);
  static BasisSystem fourier(double lo, double hi, Index nbasis,
                             std::optional<double> period = std::nullopt);

  void validate() const;
  /// Full knot sequence including the repeated boundary knots.
  std::vector<double> knots() const;
};

/// n x H matrix of basis values (or derivatives of order `deriv`) at t.
Matrix basis_eval(const BasisSystem& basis, const Vector& t, int deriv = 0);

/// Sum_d pen(d) G_d with G_d[h, k] = int phi_h^(d) phi_k^(d) dt over the
/// domain. A `pen` of length 0..2 gives weights on orders 0 and 1 and keeps
/// unit weight on the second derivative; length 3 gives all three weights.
Matrix penalty_matrix(const BasisSystem& basis, const Vector& pen);

/// Gram matrix int phi_h^(d) phi_k^(d) dt.
Matrix gram_matrix(const BasisSystem& basis, int deriv);

/// Smoothing options for one family of curves.
struct SmoothSpec {
  std::optional<Index> nbasis;  // default: max(min(ceil(n / 5), 23), norder)
  int norder = 6;
  bool bspline = true;
  Vector pen;  // see penalty_matrix
  double lambda = 1e-4;

  void validate() const;
  /// Basis on [lo, hi] for curves with n points.
  BasisSystem basis_for(double lo, double hi, Index n) const;
};

/// argmin_c ||y - Phi c||^2 + lambda c' P c.
Vector smooth_curve(const Vector& y, const Vector& t, const BasisSystem& basis,
                    double lambda, const Matrix& penalty);
Vector smooth_curve(const Vector& y, const Vector& t, const BasisSystem& basis,
                    const SmoothSpec& spec);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Vector& nodes, Vector& weights);

}  // namespace fungp
