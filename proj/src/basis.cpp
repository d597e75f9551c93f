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

#include "fungp/basis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace fungp {

BasisSystem BasisSystem::bspline(double lo, double hi, Index nbasis, int norder) {
  BasisSystem b;
  b.kind = BasisKind::BSpline;
  b.lo = lo;
  b.hi = hi;
  b.nbasis = nbasis;
  b.norder = norder;
  b.period = hi - lo;
  b.validate();
  return b;
}

BasisSystem BasisSystem::fourier(double lo, double hi, Index nbasis,
                                 std::optional<double> period) {
  BasisSystem b;
  b.kind = BasisKind::Fourier;
  b.lo = lo;
  b.hi = hi;
  b.nbasis = nbasis;
  b.period = period.value_or(hi - lo);
  b.validate();
  return b;
}

void BasisSystem::validate() const {
  require(std::isfinite(lo) && std::isfinite(hi) && hi > lo,
          "basis domain must satisfy lo < hi");
  if (kind == BasisKind::BSpline) {
    require(norder >= 1 && norder <= 20, "B-spline order must lie in [1, 20]");
    require(nbasis >= norder, "B-spline nbasis must be at least norder");
  } else {
    require(nbasis >= 1 && nbasis % 2 == 1, "Fourier nbasis must be odd");
    require(std::isfinite(period) && period > 0.0, "Fourier period must be positive");
  }
}

std::vector<double> BasisSystem::knots() const {
  require(kind == BasisKind::BSpline, "knots are defined for B-spline bases only");
  const Index interior = nbasis - norder;
  std::vector<double> u;
  u.reserve(static_cast<size_t>(nbasis + norder));
  for (int i = 0; i < norder; ++i) u.push_back(lo);
  for (Index i = 1; i <= interior; ++i)
    u.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(interior + 1));
  for (int i = 0; i < norder; ++i) u.push_back(hi);
  return u;
}

namespace {

// Basis function values and derivatives of all nonzero B-splines at x
// (de Boor / Cox recursion with derivative triangle). Returns the span
// index s: functions s - p .. s are nonzero.
Index bspline_ders(const std::vector<double>& u, Index nbasis, int order, double x,
                   int n, Matrix& ders) {
  const int p = order - 1;
  Index s = p;
  if (x >= u[static_cast<size_t>(nbasis)]) {
    s = nbasis - 1;
  } else {
    auto it = std::upper_bound(u.begin() + p, u.begin() + nbasis + 1, x);
    s = static_cast<Index>(it - u.begin()) - 1;
  }
  auto U = [&](Index i) { return u[static_cast<size_t>(i)]; };
  Matrix ndu(p + 1, p + 1);
  Vector left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = x - U(s + 1 - j);
    right(j) = U(s + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r);
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }
  ders = Matrix::Zero(n + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
  Matrix a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= std::min(n, p); ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= std::min(n, p); ++k) {
    ders.row(k) *= factor;
    factor *= p - k;
  }
  return s;
}

}  // namespace

Matrix basis_eval(const BasisSystem& basis, const Vector& t, int deriv) {
  basis.validate();
  require(deriv >= 0, "derivative order must be non-negative");
  require(t.allFinite(), "basis evaluation points must be finite");
  const Index n = t.size();
  Matrix out = Matrix::Zero(n, basis.nbasis);
  if (basis.kind == BasisKind::Fourier) {
    const double omega = 2.0 * std::numbers::pi / basis.period;
    for (Index i = 0; i < n; ++i) {
      const double x = t(i) - basis.lo;
      if (deriv == 0) out(i, 0) = 1.0;
      for (Index h = 1; 2 * h - 1 < basis.nbasis; ++h) {
        const double f = omega * static_cast<double>(h);
        // d^k/dx^k sin(fx) = f^k sin(fx + k pi / 2)
        const double shift = deriv * std::numbers::pi / 2.0;
        const double scale = std::pow(f, deriv);
        out(i, 2 * h - 1) = scale * std::sin(f * x + shift);
        out(i, 2 * h) = scale * std::cos(f * x + shift);
      }
    }
    return out;
  }
  const auto u = basis.knots();
  const double slack = 1e-10 * (basis.hi - basis.lo);
  Matrix ders;
  for (Index i = 0; i < n; ++i) {
    require(t(i) >= basis.lo - slack && t(i) <= basis.hi + slack,
            "B-spline evaluation point " + std::to_string(t(i)) + " outside [" +
                std::to_string(basis.lo) + ", " + std::to_string(basis.hi) + "]");
    const double x = std::clamp(t(i), basis.lo, basis.hi);
    if (deriv >= basis.norder) continue;
    const Index s = bspline_ders(u, basis.nbasis, basis.norder, x, deriv, ders);
    const int p = basis.norder - 1;
    for (int j = 0; j <= p; ++j) out(i, s - p + j) = ders(deriv, j);
  }
  return out;
}

void gauss_legendre(int n, Vector& nodes, Vector& weights) {
  require(n >= 1, "quadrature order must be positive");
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    nodes(i) = z;
    weights(i) = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Matrix gram_matrix(const BasisSystem& basis, int deriv) {
  basis.validate();
  std::vector<double> breaks;
  int points = 0;
  if (basis.kind == BasisKind::BSpline) {
    auto u = basis.knots();
    u.erase(std::unique(u.begin(), u.end()), u.end());
    breaks = std::move(u);
    points = basis.norder;  // exact for degree 2 (norder - 1)
  } else {
    const Index panels = 4 * basis.nbasis + 8;
    for (Index i = 0; i <= panels; ++i)
      breaks.push_back(basis.lo + (basis.hi - basis.lo) * static_cast<double>(i) /
                                      static_cast<double>(panels));
    points = 16;
  }
  Vector x, w;
  gauss_legendre(points, x, w);
  Matrix g = Matrix::Zero(basis.nbasis, basis.nbasis);
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    const Vector t = (0.5 * (b - a) * (x.array() + 1.0) + a).matrix();
    const Matrix phi = basis_eval(basis, t, deriv);
    g.noalias() += phi.transpose() * (0.5 * (b - a) * w).asDiagonal() * phi;
  }
  return 0.5 * (g + g.transpose());
}

Matrix penalty_matrix(const BasisSystem& basis, const Vector& pen) {
  require(pen.size() <= 3, "penalty weights are supported for derivative orders 0, 1, 2");
  require((pen.array() >= 0.0).all() && pen.allFinite(),
          "penalty weights must be non-negative");
  Vector weights = Vector::Zero(3);
  weights(2) = 1.0;
  weights.head(pen.size()) = pen;
  Matrix p = Matrix::Zero(basis.nbasis, basis.nbasis);
  for (int d = 0; d < 3; ++d)
    if (weights(d) > 0.0) p += weights(d) * gram_matrix(basis, d);
  return p;
}

void SmoothSpec::validate() const {
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
  require(!nbasis || *nbasis >= 1, "nbasis must be positive");
  require(pen.size() <= 3 && (pen.array() >= 0.0).all(),
          "Pen must hold at most three non-negative weights");
}

BasisSystem SmoothSpec::basis_for(double lo, double hi, Index n) const {
  validate();
  Index h = nbasis.value_or(
      std::max<Index>(std::min<Index>((n + 4) / 5, 23), bspline ? norder : 1));
  if (bspline) return BasisSystem::bspline(lo, hi, h, norder);
  if (!nbasis && h % 2 == 0) h += 1;
  return BasisSystem::fourier(lo, hi, h);
}

Vector smooth_curve(const Vector& y, const Vector& t, const BasisSystem& basis,
                    double lambda, const Matrix& penalty) {
  require(y.size() == t.size(), "smooth_curve: y and t differ in length");
  require(lambda >= 0.0, "lambda must be non-negative");
  const Matrix phi = basis_eval(basis, t);
  const Index h = basis.nbasis;
  // Stacked least squares [Phi; sqrt(lambda) R] with P = R'R, which stays
  // well conditioned for large lambda.
  Matrix design = phi;
  Vector rhs = y;
  if (lambda > 0.0) {
    require(penalty.rows() == h && penalty.cols() == h, "smooth_curve: penalty shape mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (penalty + penalty.transpose()));
    // Roundoff-level eigenvalues belong to the exact null space of the
    // penalty (e.g. lines for the second derivative).
    Vector ev = eig.eigenvalues();
    const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    ev = (ev.array() < cut).select(0.0, ev);
    const Matrix root = ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    design.conservativeResize(phi.rows() + h, h);
    design.bottomRows(h) = std::sqrt(lambda) * root;
    rhs.conservativeResize(phi.rows() + h);
    rhs.tail(h).setZero();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < h)
    throw NumericalError("smooth_curve: singular normal equations (n = " +
                         std::to_string(t.size()) + ", H = " + std::to_string(h) + ")");
  return qr.solve(rhs);
}

Vector smooth_curve(const Vector& y, const Vector& t, const BasisSystem& basis,
                    const SmoothSpec& spec) {
  spec.validate();
  const Matrix pen =
      spec.lambda > 0.0 ? penalty_matrix(basis, spec.pen) : Matrix::Zero(basis.nbasis, basis.nbasis);
  return smooth_curve(y, t, basis, spec.lambda, pen);
}

}  // namespace fungp
