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

#include "fungp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fungp/bessel.hpp"

namespace fungp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997897;

bool is_nu(double nu, double target) { return nu == target; }

Index term_size(KernelFamily family, int q) {
  switch (family) {
    case KernelFamily::Linear:
    case KernelFamily::PowEx:
    case KernelFamily::Matern:
      return q + 1;
    case KernelFamily::RatQu:
      return q + 2;
  }
  return 0;
}

void check_inputs(const Matrix& t1, const Matrix& t2, int q) {
  require(t1.cols() == q && t2.cols() == q,
          "kernel: input column count does not match input_dim");
  require(t1.allFinite() && t2.allFinite(), "kernel: non-finite inputs");
}

double matern_closed_form(double r, double nu) {
  if (is_nu(nu, 1.5)) return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
  return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

// Value of one term at a single pair of rows.
double term_value(KernelFamily family, const KernelSpec& spec,
                  const double* theta, const Matrix& t1, Index i,
                  const Matrix& t2, Index j) {
  const int q = spec.input_dim;
  switch (family) {
    case KernelFamily::Linear: {
      double k = std::exp(theta[0]);
      for (int d = 0; d < q; ++d)
        k += std::exp(theta[1 + d]) * t1(i, d) * t2(j, d);
      return k;
    }
    case KernelFamily::PowEx: {
      double dist = 0.0;
      for (int d = 0; d < q; ++d)
        dist += std::exp(theta[1 + d]) *
                std::pow(std::abs(t1(i, d) - t2(j, d)), spec.gamma);
      return std::exp(theta[0] - dist);
    }
    case KernelFamily::Matern: {
      double dist = 0.0;
      for (int d = 0; d < q; ++d) {
        const double diff = t1(i, d) - t2(j, d);
        dist += std::exp(theta[1 + d]) * diff * diff;
      }
      return std::exp(theta[0]) * matern_correlation(dist, spec.nu);
    }
    case KernelFamily::RatQu: {
      double s = 1.0;
      for (int d = 0; d < q; ++d) {
        const double diff = t1(i, d) - t2(j, d);
        s += std::exp(theta[1 + d]) * diff * diff;
      }
      return std::exp(theta[0] - std::exp(theta[1 + q]) * std::log(s));
    }
  }
  return 0.0;
}

// First (order 1) or pure second (order 2) derivatives of one term with
// respect to each of its parameters, on a symmetric input set.
void term_derivatives(KernelFamily family, const KernelSpec& spec,
                      const double* theta, const Matrix& t, int order,
                      std::vector<Matrix>& out, Index offset) {
  const int q = spec.input_dim;
  const Index n = t.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      auto put = [&](Index p, double value) {
        out[offset + p](i, j) = value;
        out[offset + p](j, i) = value;
      };
      switch (family) {
        case KernelFamily::Linear: {
          put(0, std::exp(theta[0]));
          for (int d = 0; d < q; ++d)
            put(1 + d, std::exp(theta[1 + d]) * t(i, d) * t(j, d));
          break;
        }
        case KernelFamily::PowEx: {
          const double k = term_value(family, spec, theta, t, i, t, j);
          put(0, k);
          for (int d = 0; d < q; ++d) {
            const double ew = std::exp(theta[1 + d]);
            const double dg = std::pow(std::abs(t(i, d) - t(j, d)), spec.gamma);
            if (order == 1)
              put(1 + d, -k * ew * dg);
            else
              put(1 + d, k * (ew * ew * dg * dg - ew * dg));
          }
          break;
        }
        case KernelFamily::Matern: {
          double dist = 0.0;
          for (int d = 0; d < q; ++d) {
            const double diff = t(i, d) - t(j, d);
            dist += std::exp(theta[1 + d]) * diff * diff;
          }
          const double r = std::sqrt(dist);
          const double ev = std::exp(theta[0]);
          put(0, ev * matern_closed_form(r, spec.nu));
          const bool three_halves = is_nu(spec.nu, 1.5);
          for (int d = 0; d < q; ++d) {
            const double diff = t(i, d) - t(j, d);
            const double ewd2 = std::exp(theta[1 + d]) * diff * diff;
            double first;
            if (three_halves)
              first = -1.5 * ev * ewd2 * std::exp(-kSqrt3 * r);
            else
              first = -5.0 / 6.0 * ev * ewd2 * std::exp(-kSqrt5 * r) *
                      (1.0 + kSqrt5 * r);
            if (order == 1) {
              put(1 + d, first);
              continue;
            }
            if (ewd2 == 0.0) {
              put(1 + d, 0.0);
            } else if (three_halves) {
              put(1 + d, first * (1.0 - 0.5 * kSqrt3 / r * ewd2));
            } else {
              put(1 + d, -5.0 / 6.0 * ev * ewd2 * std::exp(-kSqrt5 * r) *
                             (1.0 + kSqrt5 * r - 2.5 * ewd2));
            }
          }
          break;
        }
        case KernelFamily::RatQu: {
          double s = 1.0;
          for (int d = 0; d < q; ++d) {
            const double diff = t(i, d) - t(j, d);
            s += std::exp(theta[1 + d]) * diff * diff;
          }
          const double ev = std::exp(theta[0]);
          const double beta = std::exp(theta[1 + q]);
          const double k = ev * std::pow(s, -beta);
          const double logs = std::log(s);
          put(0, k);
          for (int d = 0; d < q; ++d) {
            const double diff = t(i, d) - t(j, d);
            const double ewd2 = std::exp(theta[1 + d]) * diff * diff;
            if (order == 1) {
              put(1 + d, -beta * ev * std::pow(s, -beta - 1.0) * ewd2);
            } else {
              put(1 + d, -beta * ev *
                             ((-beta - 1.0) * std::pow(s, -beta - 2.0) *
                                  ewd2 * ewd2 +
                              std::pow(s, -beta - 1.0) * ewd2));
            }
          }
          const double dalpha = -beta * k * logs;
          if (order == 1)
            put(1 + q, dalpha);
          else
            put(1 + q, -beta * (dalpha + k) * logs);
          break;
        }
      }
    }
  }
}

std::vector<Matrix> derivatives(const KernelSpec& spec, const HyperParams& hp,
                                const Matrix& t, int order) {
  spec.validate();
  validate_layout(spec, hp);
  check_inputs(t, t, spec.input_dim);
  if (!spec.analytic_gradient())
    throw UnsupportedGradient(
        "analytic Matern gradient is only available for nu = 3/2 and 5/2");
  const Index n = t.rows();
  const Index np = param_count(spec);
  std::vector<Matrix> out(static_cast<size_t>(np), Matrix::Zero(n, n));
  const auto offsets = term_offsets(spec);
  for (size_t k = 0; k < spec.terms.size(); ++k)
    term_derivatives(spec.terms[k], spec, hp.values.data() + offsets[k], t,
                     order, out, offsets[k]);
  const double noise = std::exp(hp.noise_log_var());
  const auto same = coincidence(t, t);
  Matrix& dn = out.back();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (same(i, j)) dn(i, j) = noise;
  return out;
}

}  // namespace

std::string_view family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Linear:
      return "linear";
    case KernelFamily::PowEx:
      return "pow.ex";
    case KernelFamily::Matern:
      return "matern";
    case KernelFamily::RatQu:
      return "rat.qu";
  }
  return "";
}

KernelFamily parse_family(std::string_view name) {
  if (name == "linear") return KernelFamily::Linear;
  if (name == "pow.ex") return KernelFamily::PowEx;
  if (name == "matern") return KernelFamily::Matern;
  if (name == "rat.qu") return KernelFamily::RatQu;
  throw ValidationError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  require(!terms.empty(), "kernel spec needs at least one term");
  for (size_t i = 0; i < terms.size(); ++i)
    for (size_t j = i + 1; j < terms.size(); ++j)
      require(terms[i] != terms[j], "kernel family listed more than once");
  require(gamma > 0.0 && gamma <= 2.0, "pow.ex gamma must lie in (0, 2]");
  require(nu > 0.0 && std::isfinite(nu), "matern nu must be positive");
  require(input_dim >= 1, "input_dim must be at least 1");
}

bool KernelSpec::has(KernelFamily family) const {
  return std::find(terms.begin(), terms.end(), family) != terms.end();
}

bool KernelSpec::analytic_gradient() const {
  return !has(KernelFamily::Matern) || is_nu(nu, 1.5) || is_nu(nu, 2.5);
}

HyperParams HyperParams::zeros(const KernelSpec& spec) {
  return HyperParams{Vector::Zero(param_count(spec))};
}

Index param_count(const KernelSpec& spec) {
  Index n = 1;
  for (auto f : spec.terms) n += term_size(f, spec.input_dim);
  return n;
}

std::vector<Index> term_offsets(const KernelSpec& spec) {
  std::vector<Index> offsets;
  Index at = 0;
  for (auto f : spec.terms) {
    offsets.push_back(at);
    at += term_size(f, spec.input_dim);
  }
  return offsets;
}

std::vector<std::string> param_names(const KernelSpec& spec) {
  std::vector<std::string> names;
  const int q = spec.input_dim;
  for (auto f : spec.terms) {
    const std::string base(family_name(f));
    if (f == KernelFamily::Linear) {
      names.push_back(base + ".a0");
      for (int d = 1; d <= q; ++d) names.push_back(base + ".a" + std::to_string(d));
      continue;
    }
    names.push_back(base + ".v");
    for (int d = 1; d <= q; ++d) names.push_back(base + ".w" + std::to_string(d));
    if (f == KernelFamily::RatQu) names.push_back(base + ".alpha");
  }
  names.emplace_back("noise");
  return names;
}

void validate_layout(const KernelSpec& spec, const HyperParams& hp) {
  require(hp.values.size() == param_count(spec),
          "hyperparameter vector length does not match kernel layout");
  for (Index i = 0; i + 1 < hp.values.size(); ++i)
    require(std::isfinite(hp.values(i)), "hyperparameters must be finite");
  require(!std::isnan(hp.noise_log_var()) &&
              hp.noise_log_var() != std::numeric_limits<double>::infinity(),
          "noise log-variance must be finite or -inf");
}

Matrix weighted_distance(const Vector& w, const Matrix& t1, const Matrix& t2,
                         double gamma) {
  require(w.size() == t1.cols() && t1.cols() == t2.cols(),
          "weighted_distance: dimension mismatch");
  require(t1.allFinite() && t2.allFinite() && w.allFinite(),
          "weighted_distance: non-finite inputs");
  require((w.array() >= 0.0).all(), "weighted_distance: negative weight");
  require(gamma > 0.0 && gamma <= 2.0, "weighted_distance: gamma must lie in (0, 2]");
  Matrix d = Matrix::Zero(t1.rows(), t2.rows());
  for (Index i = 0; i < t1.rows(); ++i)
    for (Index j = 0; j < t2.rows(); ++j) {
      double s = 0.0;
      for (Index q = 0; q < w.size(); ++q)
        s += w(q) * std::pow(std::abs(t1(i, q) - t2(j, q)), gamma);
      d(i, j) = s;
    }
  return d;
}

double matern_correlation(double d, double nu) {
  if (d <= 0.0) return 1.0;
  if (is_nu(nu, 1.5) || is_nu(nu, 2.5)) return matern_closed_form(std::sqrt(d), nu);
  const double z = std::sqrt(2.0 * nu * d);
  const double log_c = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) +
                       nu * std::log(z) + log_bessel_k(nu, z);
  return std::exp(log_c);
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> coincidence(
    const Matrix& t1, const Matrix& t2) {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> same(t1.rows(), t2.rows());
  for (Index i = 0; i < t1.rows(); ++i)
    for (Index j = 0; j < t2.rows(); ++j)
      same(i, j) = (t1.row(i).array() == t2.row(j).array()).all();
  return same;
}

Matrix cov_matrix(const KernelSpec& spec, const HyperParams& hp,
                  const Matrix& t1, const Matrix& t2, bool add_noise) {
  spec.validate();
  validate_layout(spec, hp);
  check_inputs(t1, t2, spec.input_dim);
  const auto offsets = term_offsets(spec);
  Matrix k = Matrix::Zero(t1.rows(), t2.rows());
  for (Index i = 0; i < t1.rows(); ++i)
    for (Index j = 0; j < t2.rows(); ++j) {
      double s = 0.0;
      for (size_t m = 0; m < spec.terms.size(); ++m)
        s += term_value(spec.terms[m], spec, hp.values.data() + offsets[m], t1,
                        i, t2, j);
      k(i, j) = s;
    }
  if (add_noise) {
    const double noise = std::exp(hp.noise_log_var());
    const auto same = coincidence(t1, t2);
    for (Index i = 0; i < t1.rows(); ++i)
      for (Index j = 0; j < t2.rows(); ++j)
        if (same(i, j)) k(i, j) += noise;
  }
  return k;
}

Vector cov_diagonal(const KernelSpec& spec, const HyperParams& hp,
                    const Matrix& t) {
  spec.validate();
  validate_layout(spec, hp);
  check_inputs(t, t, spec.input_dim);
  const auto offsets = term_offsets(spec);
  Vector out(t.rows());
  for (Index i = 0; i < t.rows(); ++i) {
    double s = 0.0;
    for (size_t m = 0; m < spec.terms.size(); ++m)
      s += term_value(spec.terms[m], spec, hp.values.data() + offsets[m], t, i,
                      t, i);
    out(i) = s;
  }
  return out;
}

std::vector<Matrix> cov_grad(const KernelSpec& spec, const HyperParams& hp,
                             const Matrix& t) {
  return derivatives(spec, hp, t, 1);
}

std::vector<Matrix> cov_second_deriv(const KernelSpec& spec,
                                     const HyperParams& hp, const Matrix& t) {
  return derivatives(spec, hp, t, 2);
}

}  // namespace fungp
