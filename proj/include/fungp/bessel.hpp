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

namespace fungp {

/// log K_nu(x) for real order nu and x > 0. Works for orders and arguments
/// where K_nu itself would overflow or underflow a double.
///
/// Small arguments (x <= 2) use Temme's series for the fractional order
/// |mu| <= 1/2; larger arguments use Steed's continued fraction. The integer
/// part of the order is reached by forward recurrence, which is stable for K.
double log_bessel_k(double nu, double x);

/// Modified Bessel function of the second kind, K_nu(x).
double bessel_k(double nu, double x);

}  // namespace fungp
