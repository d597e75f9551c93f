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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fungp/common.hpp"

namespace fungp {

struct OptimizerOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;   // scaled by (1 + |f|)
  double relative_tolerance = 1e-10;  // on successive objective values
  double max_step = 2.0;              // largest coordinate move per iteration
};

struct OptimizerResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Objective returns f(x) and writes the gradient when one is requested.
/// Throwing NumericalError (or returning a non-finite value) marks x as
/// infeasible; the line search then backtracks.
using Objective = std::function<double(const Vector& x, Vector* gradient)>;

/// BFGS minimization with an Armijo backtracking line search.
OptimizerResult minimize_bfgs(const Objective& objective, const Vector& x0,
                              const OptimizerOptions& options = {});

struct StartOutcome {
  Vector start;
  Vector end;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct MultiStartResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<StartOutcome> starts;
};

/// BFGS from every start, keeping the lowest finite value. A start counts as
/// converged when BFGS converged or stalled with gradient norm below
/// 1e-3 (1 + |f|). Throws NumericalError, naming `what`, if none converged.
MultiStartResult minimize_multistart(const Objective& objective, const std::vector<Vector>& starts,
                                     const OptimizerOptions& options, const std::string& what);

/// Wraps a value-only function with a central-difference gradient.
Objective with_central_differences(std::function<double(const Vector&)> f,
                                   double step = 1e-6);

/// Central-difference gradient of f at x.
Vector central_gradient(const std::function<double(const Vector&)>& f,
                        const Vector& x, double step = 1e-6);

}  // namespace fungp
