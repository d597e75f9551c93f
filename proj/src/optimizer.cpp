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

#include "fungp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fungp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& objective, const Vector& x, Vector* grad) {
  try {
    const double f = objective(x, grad);
    if (!std::isfinite(f)) return kInf;
    if (grad && !grad->allFinite()) return kInf;
    return f;
  } catch (const NumericalError&) {
    return kInf;
  }
}

}  // namespace

Vector central_gradient(const std::function<double(const Vector&)>& f,
                        const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = f(probe);
    probe(i) = x(i) - step;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

Objective with_central_differences(std::function<double(const Vector&)> f,
                                   double step) {
  return [f = std::move(f), step](const Vector& x, Vector* gradient) {
    const double value = f(x);
    if (gradient && std::isfinite(value)) *gradient = central_gradient(f, x, step);
    return value;
  };
}

OptimizerResult minimize_bfgs(const Objective& objective, const Vector& x0,
                              const OptimizerOptions& options) {
  const Index n = x0.size();
  OptimizerResult result;
  result.x = x0;
  Vector g(n);
  double f = safe_eval(objective, result.x, &g);
  if (!std::isfinite(f)) {
    result.value = f;
    result.message = "objective is not finite at the starting point";
    return result;
  }
  Matrix h_inv = Matrix::Identity(n, n);
  bool fresh = true;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    const double gnorm = g.norm();
    if (gnorm < options.gradient_tolerance * (1.0 + std::abs(f))) {
      result.converged = true;
      result.message = "gradient norm below tolerance";
      break;
    }
    Vector p = -h_inv * g;
    if (g.dot(p) >= 0.0) {
      h_inv.setIdentity();
      fresh = true;
      p = -g;
    }
    const double biggest = p.cwiseAbs().maxCoeff();
    if (biggest > options.max_step) p *= options.max_step / biggest;

    const double slope = g.dot(p);
    double step = 1.0;
    Vector x_new(n), g_new(n);
    double f_new = kInf;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      x_new = result.x + step * p;
      f_new = safe_eval(objective, x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        h_inv.setIdentity();
        fresh = true;
        continue;
      }
      result.message = "line search failed to decrease the objective";
      break;
    }

    const Vector s = x_new - result.x;
    const Vector y = g_new - g;
    const double change = std::abs(f - f_new) / (1.0 + std::abs(f));
    result.x = x_new;
    f = f_new;
    g = g_new;
    result.iterations = iter + 1;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h_inv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(n, n);
      h_inv = (eye - rho * s * y.transpose()) * h_inv *
                  (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
      fresh = false;
    }
    if (change < options.relative_tolerance) {
      result.converged = true;
      result.message = "relative objective change below tolerance";
      break;
    }
  }
  if (!result.converged && result.message.empty())
    result.message = "iteration limit reached";
  result.value = f;
  result.gradient_norm = g.norm();
  return result;
}

MultiStartResult minimize_multistart(const Objective& objective, const std::vector<Vector>& starts,
                                     const OptimizerOptions& options, const std::string& what) {
  require(!starts.empty(), what + ": at least one optimizer start is required");
  MultiStartResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    StartOutcome out;
    out.start = x0;
    OptimizerResult res;
    try {
      res = minimize_bfgs(objective, x0, options);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      res.x = x0;
      res.value = std::numeric_limits<double>::infinity();
      res.message = e.what();
    }
    out.end = res.x;
    out.value = res.value;
    out.gradient_norm = res.gradient_norm;
    out.iterations = res.iterations;
    out.message = res.message;
    out.converged = std::isfinite(res.value) &&
                    (res.converged || res.gradient_norm < 1e-3 * (1.0 + std::abs(res.value)));
    if (std::isfinite(res.value) && res.value < best.value) {
      best.x = res.x;
      best.value = res.value;
      best.gradient_norm = res.gradient_norm;
      best.iterations = res.iterations;
      best.converged = out.converged;
    }
    best.starts.push_back(std::move(out));
  }
  const bool any = std::any_of(best.starts.begin(), best.starts.end(),
                               [](const StartOutcome& s) { return s.converged; });
  if (!std::isfinite(best.value) || !any) {
    std::string message = what + " failed on every restart:";
    for (size_t i = 0; i < best.starts.size(); ++i)
      message += " [" + std::to_string(i) + ": " + best.starts[i].message + "]";
    throw NumericalError(message);
  }
  return best;
}

}  // namespace fungp
