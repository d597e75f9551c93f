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

#include "fungp/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fungp/common.hpp"

namespace fungp {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// Odd-power Taylor coefficients of 1/Gamma(1 + x) around 0.
constexpr double kInvGammaOdd[] = {
    0.5772156649015328606,  -0.0420026350340952355, -0.0421977345555443367,
    0.0072189432466630995,  -0.0002152416741149510, -0.0000201348547807882,
    0.0000011330272319817,  0.0000000061160951045,  -0.0000000011812745705,
    0.0000000000077823494};

// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl,
                  double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  gam2 = 0.5 * (gammi + gampl);
  if (std::abs(mu) > 0.1) {
    gam1 = (gammi - gampl) / (2.0 * mu);
    return;
  }
  const double mu2 = mu * mu;
  double term = 1.0;
  gam1 = 0.0;
  for (double c : kInvGammaOdd) {
    gam1 -= c * term;
    term *= mu2;
  }
}

// Returns K_mu(x) and K_{mu+1}(x), both multiplied by exp(x), for |mu| <= 1/2.
void scaled_k_pair(double mu, double x, double& kmu, double& kmu1) {
  const double mu2 = mu * mu;
  if (x <= 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= (i - mu);
      q /= (i + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    const double scale = std::exp(x);
    kmu = sum * scale;
    kmu1 = sum1 * (2.0 / x) * scale;
    return;
  }
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h = a1 * h;
  kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  kmu1 = kmu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double log_bessel_k(double nu, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    if (x == std::numeric_limits<double>::infinity()) return -x;
    throw ValidationError("bessel_k: argument must be positive and finite");
  }
  if (!std::isfinite(nu)) throw ValidationError("bessel_k: order must be finite");
  nu = std::abs(nu);
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  double kmu, kmu1;
  scaled_k_pair(mu, x, kmu, kmu1);
  // Forward recurrence K_{m+1} = (2m/x) K_m + K_{m-1}, rescaled to stay finite.
  double log_scale = 0.0;
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * (2.0 / x) * kmu1 + kmu;
    kmu = kmu1;
    kmu1 = next;
    if (kmu1 > 1e250) {
      kmu *= 1e-250;
      kmu1 *= 1e-250;
      log_scale += 250.0 * std::numbers::ln10;
    }
  }
  return std::log(kmu) + log_scale - x;
}

double bessel_k(double nu, double x) { return std::exp(log_bessel_k(nu, x)); }

}  // namespace fungp
