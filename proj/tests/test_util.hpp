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

#include <cmath>
#include <functional>
#include <random>

#include "fungp/common.hpp"

namespace fungp::testing {

inline Matrix uniform_matrix(Index rows, Index cols, std::mt19937_64& rng,
                             double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector uniform_vector(Index n, std::mt19937_64& rng, double lo, double hi) {
  return uniform_matrix(n, 1, rng, lo, hi).col(0);
}

inline Vector normal_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

/// ||a - b||_F / max(||b||_F, floor).
inline double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-12) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Central first difference of a matrix-valued function along coordinate j.
inline Matrix central_diff(const std::function<Matrix(const Vector&)>& f,
                           const Vector& x, Index j, double h) {
  Vector up = x, down = x;
  up(j) += h;
  down(j) -= h;
  return (f(up) - f(down)) / (2.0 * h);
}

/// Five-point central second difference along coordinate j.
inline Matrix second_diff(const std::function<Matrix(const Vector&)>& f,
                          const Vector& x, Index j, double h) {
  auto at = [&](double k) {
    Vector y = x;
    y(j) += k * h;
    return f(y);
  };
  return (-at(2) + 16.0 * at(1) - 30.0 * f(x) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h);
}

}  // namespace fungp::testing
