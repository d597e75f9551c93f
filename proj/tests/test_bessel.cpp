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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fungp/bessel.hpp"

using fungp::bessel_k;
using fungp::log_bessel_k;

namespace {

// Half-integer orders have elementary closed forms.
double k_half(double x) { return std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x); }
double k_three_halves(double x) { return k_half(x) * (1.0 + 1.0 / x); }
double k_five_halves(double x) { return k_half(x) * (1.0 + 3.0 / x + 3.0 / (x * x)); }

}  // namespace

TEST(Bessel, HalfIntegerClosedForms) {
  for (double x : {1e-3, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 5.0, 20.0, 80.0}) {
    EXPECT_NEAR(bessel_k(0.5, x) / k_half(x), 1.0, 1e-13) << x;
    EXPECT_NEAR(bessel_k(1.5, x) / k_three_halves(x), 1.0, 1e-13) << x;
    EXPECT_NEAR(bessel_k(2.5, x) / k_five_halves(x), 1.0, 1e-13) << x;
  }
}

TEST(Bessel, MatchesStandardLibrary) {
  for (double nu : {0.0, 0.1, 0.3, 0.75, 1.0, 1.3, 2.0, 3.7, 7.25, 20.0}) {
    for (double x : {0.01, 0.3, 1.0, 1.99, 2.01, 4.0, 15.0, 60.0}) {
      const double expected = std::cyl_bessel_k(nu, x);
      EXPECT_NEAR(bessel_k(nu, x) / expected, 1.0, 1e-12) << nu << " " << x;
    }
  }
}

TEST(Bessel, LogScaleAvoidsOverflow) {
  // K_200(1) ~ 1e375 overflows a double; the log must still be finite and
  // agree with the leading small-argument behaviour lgamma(nu) + (nu-1) log 2 - nu log x.
  const double lk = log_bessel_k(200.0, 1.0);
  EXPECT_TRUE(std::isfinite(lk));
  const double leading = std::lgamma(200.0) + 199.0 * std::numbers::ln2;
  EXPECT_NEAR(lk, leading, 1e-2);
  // Large arguments underflow: log K_nu(x) ~ -x + 0.5 log(pi / 2x).
  EXPECT_NEAR(log_bessel_k(0.5, 1000.0), -1000.0 + 0.5 * std::log(std::numbers::pi / 2000.0), 1e-10);
}

TEST(Bessel, NegativeOrderIsSymmetric) {
  EXPECT_DOUBLE_EQ(bessel_k(-1.7, 0.8), bessel_k(1.7, 0.8));
}

TEST(Bessel, RejectsNonPositiveArgument) {
  EXPECT_THROW(bessel_k(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(bessel_k(1.0, -1.0), std::invalid_argument);
}
