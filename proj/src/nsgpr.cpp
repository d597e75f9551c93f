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

#include "fungp/nsgpr.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fungp/basis.hpp"
#include "fungp/seeds.hpp"

namespace fungp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

Index angle_count(Index q) { return q * (q - 1) / 2; }

// Uniform periodic cubic B-spline value for the cardinal spline on [0, 4).
double cardinal_cubic(double s) {
  if (s < 0.0 || s >= 4.0) return 0.0;
  if (s < 1.0) return s * s * s / 6.0;
  if (s < 2.0) return (-3.0 * s * s * s + 12.0 * s * s - 12.0 * s + 4.0) / 6.0;
  if (s < 3.0) return (3.0 * s * s * s - 24.0 * s * s + 60.0 * s - 44.0) / 6.0;
  const double r = 4.0 - s;
  return r * r * r / 6.0;
}

Matrix periodic_basis(const Vector& x, int nbasis) {
  const double k = static_cast<double>(nbasis);
  Matrix out(x.size(), nbasis);
  for (Index i = 0; i < x.size(); ++i) {
    const double u = (x(i) - std::floor(x(i))) * k;
    for (int j = 0; j < nbasis; ++j) {
      double s = std::fmod(u - static_cast<double>(j), k);
      if (s < 0.0) s += k;
      out(i, j) = cardinal_cubic(s);
    }
  }
  return out;
}

Small sigma_at(const VaryingCoeffs& c, const Matrix& phi, Index i) {
  const Index q = c.input_dim;
  SmallVec radius(q);
  for (Index k = 0; k < q; ++k) radius(k) = std::exp(phi.row(i).dot(c.log_radius.col(k)));
  Small u = Small::Identity(q, q);
  if (!c.flags.sep_cov && q > 1) {
    Index a = 0;
    for (Index r = 1; r < q; ++r) {
      double carry = 1.0;
      for (Index k = 0; k < r; ++k, ++a) {
        const double ang = std::numbers::pi / (1.0 + std::exp(-phi.row(i).dot(c.angle.col(a))));
        u(r, k) = carry * std::cos(ang);
        carry *= std::sin(ang);
      }
      u(r, r) = carry;
    }
  }
  const Small l = radius.asDiagonal() * u;
  return l * l.transpose();
}

struct PointParams {
  std::vector<Small> sigma_mat;
  Vector quarter_det;  // |Sigma|^{1/4} = |A|^{-1/4}
  Vector sigma;
};

PointParams point_params(const VaryingCoeffs& c, const Matrix& t) {
  const Matrix phi = c.basis(t);
  PointParams p;
  p.sigma_mat.reserve(static_cast<size_t>(t.rows()));
  p.quarter_det.resize(t.rows());
  p.sigma = c.flags.unit_signal_variance ? Vector::Ones(t.rows())
                                         : Vector((phi * c.log_sigma).array().exp());
  for (Index i = 0; i < t.rows(); ++i) {
    p.sigma_mat.push_back(sigma_at(c, phi, i));
    const double det = p.sigma_mat.back().determinant();
    if (!(det > 0.0) || !std::isfinite(det))
      throw NumericalError("nonstationary kernel: anisotropy matrix is not positive definite");
    p.quarter_det(i) = std::pow(det, 0.25);
  }
  return p;
}

// Q_tt' and |avg Sigma|^{1/2} for one pair.
void pair_terms(const Small& s1, const Small& s2, const SmallVec& d, double& qform,
                double& half_det) {
  const Small avg = 0.5 * (s1 + s2);
  Eigen::LLT<Small> llt(avg);
  if (llt.info() != Eigen::Success)
    throw NumericalError("nonstationary kernel: averaged anisotropy matrix is singular");
  const Small& l = llt.matrixLLT();
  double root_det = 1.0;
  for (Index k = 0; k < avg.rows(); ++k) root_det *= l(k, k);
  half_det = root_det;
  const SmallVec z = llt.matrixL().solve(d);
  qform = z.squaredNorm();
}

double correlation(const NSCorrelation& corr, double qform) {
  if (corr.family == KernelFamily::PowEx) {
    if (qform <= 0.0) return 1.0;
    return std::exp(-std::pow(qform, 0.5 * corr.gamma));
  }
  return matern_correlation(qform, corr.nu);
}

void check_inputs(const VaryingCoeffs& c, const Matrix& t1, const Matrix& t2) {
  c.validate();
  require(t1.cols() == c.input_dim && t2.cols() == c.input_dim,
          "nonstationary kernel: input dimension mismatch");
  require(t1.allFinite() && t2.allFinite(), "nonstationary kernel: non-finite inputs");
}

}  // namespace

void NSCorrelation::validate() const {
  require(family == KernelFamily::PowEx || family == KernelFamily::Matern,
          "nonstationary correlation must be pow.ex or matern");
  require(gamma > 0.0 && gamma <= 2.0, "pow.ex gamma must lie in (0, 2]");
  require(nu > 0.0, "matern nu must be positive");
}

Index VaryingCoeffs::surface_size() const {
  Index k = 1;
  for (size_t i = 0; i < which_tau.size(); ++i) k *= nbasis;
  return k;
}

void VaryingCoeffs::validate() const {
  require(input_dim >= 1 && input_dim <= 3, "nonstationary kernel supports 1 to 3 input dimensions");
  require(nbasis >= 4, "nonstationary kernel needs nbasis >= 4 (cubic B-splines)");
  require(!which_tau.empty() && static_cast<Index>(which_tau.size()) <= input_dim,
          "whichTau must be a non-empty subset of the input coordinates");
  for (size_t i = 0; i < which_tau.size(); ++i) {
    require(which_tau[i] >= 0 && which_tau[i] < input_dim, "whichTau coordinate out of range");
    for (size_t j = 0; j < i; ++j) require(which_tau[i] != which_tau[j], "whichTau repeats a coordinate");
  }
  const auto d = static_cast<Index>(which_tau.size());
  require(static_cast<Index>(cyclic.size()) == d && lo.size() == d && hi.size() == d,
          "cyclic flags and scaling ranges need one entry per whichTau coordinate");
  require((hi.array() > lo.array()).all(), "whichTau coordinates need a non-empty range");
  const Index k = surface_size();
  require(log_sigma.size() == k && log_radius.rows() == k && log_radius.cols() == input_dim &&
              angle.rows() == k && angle.cols() == angle_count(input_dim),
          "varying coefficient shapes do not match nbasis and the input dimension");
  require(log_sigma.allFinite() && log_radius.allFinite() && angle.allFinite(),
          "varying coefficients must be finite");
  require(!std::isnan(noise_log_var) && noise_log_var < std::numeric_limits<double>::infinity(),
          "noise log-variance must be finite or -inf");
}

Matrix VaryingCoeffs::basis(const Matrix& t) const {
  Matrix out = Matrix::Ones(t.rows(), 1);
  for (size_t j = 0; j < which_tau.size(); ++j) {
    const Index col = which_tau[j];
    Vector x = ((t.col(col).array() - lo(static_cast<Index>(j))) /
                (hi(static_cast<Index>(j)) - lo(static_cast<Index>(j))))
                   .matrix();
    Matrix b;
    if (cyclic[j]) {
      b = periodic_basis(x, nbasis);
    } else {
      x = x.cwiseMax(0.0).cwiseMin(1.0);
      b = basis_eval(BasisSystem::bspline(0.0, 1.0, nbasis, 4), x);
    }
    Matrix next(t.rows(), out.cols() * b.cols());
    for (Index i = 0; i < t.rows(); ++i)
      for (Index a = 0; a < out.cols(); ++a)
        for (Index c = 0; c < b.cols(); ++c) next(i, a * b.cols() + c) = out(i, a) * b(i, c);
    out = std::move(next);
  }
  return out;
}

VaryingCoeffs VaryingCoeffs::constant(Index input_dim, std::vector<int> which_tau, int nbasis,
                                      Vector lo, Vector hi, std::vector<bool> cyclic,
                                      double log_sigma, const Vector& log_radius,
                                      const Vector& angle, double noise_log_var) {
  VaryingCoeffs c;
  c.input_dim = input_dim;
  c.which_tau = std::move(which_tau);
  c.nbasis = nbasis;
  c.cyclic = std::move(cyclic);
  c.lo = std::move(lo);
  c.hi = std::move(hi);
  const Index k = c.surface_size();
  require(log_radius.size() == input_dim && angle.size() == angle_count(input_dim),
          "constant coefficients: wrong number of radii or angles");
  c.log_sigma = Vector::Constant(k, log_sigma);
  c.log_radius = Matrix::Ones(k, 1) * log_radius.transpose();
  c.angle = Matrix::Ones(k, 1) * angle.transpose();
  c.noise_log_var = noise_log_var;
  c.validate();
  return c;
}

Vector ns_sigma(const VaryingCoeffs& c, const Matrix& t) {
  check_inputs(c, t, t);
  return point_params(c, t).sigma;
}

std::vector<Matrix> ns_anisotropy_inverse(const VaryingCoeffs& c, const Matrix& t) {
  check_inputs(c, t, t);
  const Matrix phi = c.basis(t);
  std::vector<Matrix> out;
  for (Index i = 0; i < t.rows(); ++i) out.emplace_back(sigma_at(c, phi, i));
  return out;
}

Matrix ns_quadratic_form(const VaryingCoeffs& c, const Matrix& t1, const Matrix& t2) {
  check_inputs(c, t1, t2);
  const PointParams p1 = point_params(c, t1), p2 = point_params(c, t2);
  Matrix out(t1.rows(), t2.rows());
  for (Index i = 0; i < t1.rows(); ++i)
    for (Index j = 0; j < t2.rows(); ++j) {
      const SmallVec d = (t1.row(i) - t2.row(j)).transpose();
      double half_det = 0.0;
      pair_terms(p1.sigma_mat[static_cast<size_t>(i)], p2.sigma_mat[static_cast<size_t>(j)], d,
                 out(i, j), half_det);
    }
  return out;
}

Matrix ns_cov_matrix(const NSCorrelation& corr, const VaryingCoeffs& c, const Matrix& t1,
                     const Matrix& t2, bool add_noise) {
  corr.validate();
  check_inputs(c, t1, t2);
  const bool same = &t1 == &t2;
  const PointParams p1 = point_params(c, t1);
  const PointParams p2 = same ? PointParams{} : point_params(c, t2);
  const PointParams& q2 = same ? p1 : p2;
  Matrix out(t1.rows(), t2.rows());
  for (Index i = 0; i < t1.rows(); ++i) {
    for (Index j = same ? i : 0; j < t2.rows(); ++j) {
      const auto si = static_cast<size_t>(i), sj = static_cast<size_t>(j);
      const SmallVec d = (t1.row(i) - t2.row(j)).transpose();
      double qform = 0.0, half_det = 1.0;
      pair_terms(p1.sigma_mat[si], q2.sigma_mat[sj], d, qform, half_det);
      const double value = p1.sigma(i) * q2.sigma(j) * p1.quarter_det(i) * q2.quarter_det(j) /
                           half_det * correlation(corr, qform);
      out(i, j) = value;
      if (same) out(j, i) = value;
    }
  }
  if (!out.allFinite()) throw NumericalError("nonstationary kernel: non-finite covariance");
  if (add_noise && !c.flags.zero_noise_variance) {
    const double noise = std::exp(c.noise_log_var);
    const auto mask = coincidence(t1, t2);
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j)
        if (mask(i, j)) out(i, j) += noise;
  }
  return out;
}

Vector ns_pack(const VaryingCoeffs& c) {
  std::vector<double> v;
  auto append = [&](const Matrix& m) {
    for (Index col = 0; col < m.cols(); ++col)
      for (Index r = 0; r < m.rows(); ++r) v.push_back(m(r, col));
  };
  if (!c.flags.unit_signal_variance) append(c.log_sigma);
  append(c.log_radius);
  if (!c.flags.sep_cov) append(c.angle);
  if (!c.flags.zero_noise_variance) v.push_back(c.noise_log_var);
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

void ns_unpack(VaryingCoeffs& c, const Vector& free) {
  Index pos = 0;
  auto take = [&](auto& m) {
    for (Index col = 0; col < m.cols(); ++col)
      for (Index r = 0; r < m.rows(); ++r) {
        require(pos < free.size(), "nonstationary parameter vector is too short");
        m(r, col) = free(pos++);
      }
  };
  if (!c.flags.unit_signal_variance) take(c.log_sigma);
  take(c.log_radius);
  if (!c.flags.sep_cov) take(c.angle);
  if (!c.flags.zero_noise_variance) {
    require(pos < free.size(), "nonstationary parameter vector is too short");
    c.noise_log_var = free(pos++);
  }
  require(pos == free.size(), "nonstationary parameter vector is too long");
}

double ns_log_likelihood(const NSCorrelation& corr, const VaryingCoeffs& c, const Dataset& data,
                         const MeanModel& mean) {
  data.validate();
  double value = 0.0;
  auto add = [&](const Matrix& inputs, Matrix y) {
    y.colwise() -= mean_eval(mean, inputs);
    const CovFactor factor(ns_cov_matrix(corr, c, inputs, inputs, true));
    const Matrix alpha = factor.solve(y);
    const double k = static_cast<double>(y.cols());
    value += -0.5 * k * factor.log_det() - 0.5 * (y.array() * alpha.array()).sum() -
             0.5 * k * static_cast<double>(inputs.rows()) * kLog2Pi;
  };
  if (data.shared_grid()) {
    add(data.grid(), data.responses());
  } else {
    for (Index m = 0; m < data.realizations(); ++m) add(data.inputs(m), data.response(m));
  }
  return value;
}

NSGPRModel::NSGPRModel(NSCorrelation corr, VaryingCoeffs coeffs, MeanModel mean, Dataset train,
                       FitReport report)
    : corr_(corr),
      coeffs_(std::move(coeffs)),
      mean_(std::move(mean)),
      train_(std::move(train)),
      report_(std::move(report)) {
  corr_.validate();
  coeffs_.validate();
  train_.validate();
  require(train_.input_dim() == coeffs_.input_dim, "NSGPR: dataset input dimension mismatch");
  const Index groups = train_.shared_grid() ? 1 : train_.realizations();
  for (Index g = 0; g < groups; ++g) {
    const Matrix& inputs = train_.inputs(g);
    factors_.emplace_back(ns_cov_matrix(corr_, coeffs_, inputs, inputs, true));
  }
  for (Index m = 0; m < train_.realizations(); ++m) {
    const Matrix& inputs = train_.inputs(m);
    alphas_.push_back(factor(m).solve(Vector(train_.response(m) - mean_eval(mean_, inputs))));
  }
}

const CovFactor& NSGPRModel::factor(Index realization) const {
  require(realization >= 0 && realization < train_.realizations(), "realization index out of range");
  return factors_[static_cast<size_t>(train_.shared_grid() ? 0 : realization)];
}

Vector NSGPRModel::alpha(Index realization) const {
  require(realization >= 0 && realization < train_.realizations(), "realization index out of range");
  return alphas_[static_cast<size_t>(realization)];
}

NSGPRModel nsgpr_fit(const Dataset& data, const NSFitOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  options.corr.validate();
  data.validate();
  const Index q = data.input_dim();
  require(q >= 1 && q <= 3, "NSGPR estimation supports 1 to 3 input dimensions");
  require(options.restarts >= 1, "at least one optimizer start is required");

  VaryingCoeffs c;
  c.input_dim = q;
  c.nbasis = options.nbasis;
  c.flags = options.flags;
  if (options.which_tau.empty()) {
    for (int i = 0; i < q; ++i) c.which_tau.push_back(i);
  } else {
    c.which_tau = options.which_tau;
  }
  const auto d = static_cast<Index>(c.which_tau.size());
  c.cyclic = options.cyclic.empty() ? std::vector<bool>(static_cast<size_t>(d), false) : options.cyclic;

  Vector lo = Vector::Constant(q, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (Index m = 0; m < (data.shared_grid() ? 1 : data.realizations()); ++m) {
    lo = lo.cwiseMin(data.inputs(m).colwise().minCoeff().transpose());
    hi = hi.cwiseMax(data.inputs(m).colwise().maxCoeff().transpose());
  }
  c.lo.resize(d);
  c.hi.resize(d);
  for (Index j = 0; j < d; ++j) {
    require(c.which_tau[static_cast<size_t>(j)] >= 0 && c.which_tau[static_cast<size_t>(j)] < q,
            "whichTau coordinate out of range");
    c.lo(j) = lo(c.which_tau[static_cast<size_t>(j)]);
    c.hi(j) = hi(c.which_tau[static_cast<size_t>(j)]);
  }

  const MeanModel mean = mean_fit(data, options.mean);
  double sum = 0.0, sq = 0.0;
  Index count = 0;
  for (Index m = 0; m < data.realizations(); ++m) {
    const Vector r = data.response(m) - mean_eval(mean, data.inputs(m));
    sum += r.sum();
    sq += r.squaredNorm();
    count += r.size();
  }
  const double mean_y = sum / static_cast<double>(count);
  const double var_y = std::max(sq / static_cast<double>(count) - mean_y * mean_y, 1e-8);

  const Index k = c.surface_size();
  c.log_sigma = Vector::Constant(k, 0.5 * std::log(var_y));
  c.log_radius.resize(k, q);
  for (Index col = 0; col < q; ++col) {
    const double range = hi(col) > lo(col) ? hi(col) - lo(col) : 1.0;
    c.log_radius.col(col).setConstant(std::log(0.2 * range));
  }
  c.angle = Matrix::Zero(k, angle_count(q));
  c.noise_log_var = options.flags.zero_noise_variance
                        ? -std::numeric_limits<double>::infinity()
                        : std::log(std::max(0.1 * var_y, 1e-8));
  c.validate();

  // Restarts shift every surface level and perturb coefficients slightly.
  std::vector<Vector> starts{ns_pack(c)};
  std::mt19937_64 rng(seeds::derive(options.seed, seeds::kRestarts));
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (int r = 1; r < options.restarts; ++r) {
    VaryingCoeffs s = c;
    auto perturb = [&](auto& m) {
      for (Index col = 0; col < m.cols(); ++col) {
        const double level = shift(rng);
        for (Index i = 0; i < m.rows(); ++i) m(i, col) += level + jitter(rng);
      }
    };
    perturb(s.log_sigma);
    perturb(s.log_radius);
    perturb(s.angle);
    if (!options.flags.zero_noise_variance) s.noise_log_var += shift(rng);
    starts.push_back(ns_pack(s));
  }

  auto negative_ll = [&](const Vector& free) {
    VaryingCoeffs trial = c;
    ns_unpack(trial, free);
    try {
      return -ns_log_likelihood(options.corr, trial, data, mean);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto best = minimize_multistart(with_central_differences(negative_ll, 1e-6), starts,
                                        options.optimizer, "NSGPR fit");

  FitReport report;
  report.analytic_gradient = false;
  report.converged = best.converged;
  report.log_likelihood = -best.value;
  report.gradient_norm = best.gradient_norm;
  report.iterations = best.iterations;
  for (const auto& s : best.starts) {
    RestartDiagnostics diag;
    diag.start = s.start;
    diag.end = s.end;
    diag.log_likelihood = -s.value;
    diag.gradient_norm = s.gradient_norm;
    diag.iterations = s.iterations;
    diag.converged = s.converged;
    diag.message = s.message;
    report.restarts.push_back(std::move(diag));
  }
  report.initial_log_likelihood = -negative_ll(starts.front());
  ns_unpack(c, best.x);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return NSGPRModel(options.corr, std::move(c), mean, data, std::move(report));
}

PredictionResult nsgpr_predict(const NSGPRModel& model, const Matrix& tstar, bool noise_free,
                               Index realization) {
  require(tstar.cols() == model.coeffs().input_dim, "prediction input dimension mismatch");
  require(tstar.allFinite(), "prediction inputs must be finite");
  const Matrix& inputs = model.train().inputs(realization);
  const Matrix cross = ns_cov_matrix(model.corr(), model.coeffs(), tstar, inputs, false);
  const Vector sig = ns_sigma(model.coeffs(), tstar);
  const Matrix v = model.factor(realization).half_solve(cross.transpose());
  Vector var = (sig.array().square().matrix() - v.colwise().squaredNorm().transpose());
  PredictionResult out;
  if ((var.array() < 0.0).any()) {
    out.warnings.push_back("negative predictive variances clamped to zero");
    var = var.cwiseMax(0.0);
  }
  if (!noise_free && !model.coeffs().flags.zero_noise_variance)
    var.array() += std::exp(model.coeffs().noise_log_var);
  out.grid = tstar;
  out.mean = mean_eval(model.mean(), tstar) + cross * model.alpha(realization);
  out.sd = var.cwiseSqrt();
  out.noise_free = noise_free;
  return out;
}

}  // namespace fungp
