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

#include "fungp/gpfr.hpp"

#include <cmath>

namespace fungp {

FRData GPFRData::mean_part() const {
  FRData d;
  d.t = t;
  d.y = y;
  d.u = u;
  d.x = fx;
  return d;
}

Index GPFRModel::gp_input_dim() const {
  return (gp_time ? 1 : 0) + static_cast<Index>(train.gpx.size());
}

Matrix GPFRModel::gp_inputs(const Vector& t, const std::vector<Vector>& gpx) const {
  require(gpx.size() == train.gpx.size(),
          "GP inputs: expected " + std::to_string(train.gpx.size()) + " functional covariates");
  Matrix out(t.size(), gp_input_dim());
  Index col = 0;
  if (gp_time) out.col(col++) = t;
  for (const auto& x : gpx) {
    require(x.size() == t.size(), "GP inputs: covariate length does not match the grid");
    out.col(col++) = x;
  }
  return out;
}

GPFRModel gpfr_fit(const GPFRData& data, const GPFROptions& options) {
  const Index m = data.curves();
  require(m >= 2, "GPFR needs at least two training curves");
  const FRData fr_data = data.mean_part();
  fr_data.validate();
  for (size_t k = 0; k < data.gpx.size(); ++k) {
    require(static_cast<Index>(data.gpx[k].size()) == m,
            "GPFR: GP covariate " + std::to_string(k) + " needs one curve per response");
    for (Index i = 0; i < m; ++i)
      require(data.gpx[k][static_cast<size_t>(i)].size() == data.t[static_cast<size_t>(i)].size(),
              "GPFR: GP covariate " + std::to_string(k) + " does not match curve " +
                  std::to_string(i));
  }
  require(options.gp_time || !data.gpx.empty(),
          "GPFR: the GP needs time and/or functional covariates as inputs");

  GPFRModel model;
  model.train = data;
  model.gp_time = options.gp_time;
  model.fr = fr_fit(fr_data, options.fr);

  std::vector<Realization> curves;
  for (Index i = 0; i < m; ++i) {
    const auto s = static_cast<size_t>(i);
    std::vector<Vector> fx, gpx;
    for (const auto& c : data.fx) fx.push_back(c[s]);
    for (const auto& c : data.gpx) gpx.push_back(c[s]);
    const Vector mu = fr_mean_eval(model.fr, data.u.row(i).transpose(), fx, data.t[s]);
    model.residuals.push_back(data.y[s] - mu);
    curves.push_back({model.gp_inputs(data.t[s], gpx), model.residuals.back()});
  }
  Dataset residuals = Dataset::ragged(std::move(curves));

  KernelSpec spec = options.kernel;
  spec.input_dim = static_cast<int>(model.gp_input_dim());
  if (options.fixed) {
    model.gp = GPModel(spec, *options.fixed, MeanModel{}, residuals);
  } else {
    model.gp = fit(residuals, spec, MeanModel{}, options.fit);
  }

  if (options.fitting) {
    const auto& gp = model.gp;
    for (Index i = 0; i < m; ++i) {
      const auto s = static_cast<size_t>(i);
      const Matrix& inputs = gp.train().inputs(i);
      const Conditional c = gp_condition(gp.spec(), gp.hyper(), inputs, gp.factor(i), gp.alpha(i),
                                         inputs, true);
      model.fitted_mean.push_back(data.y[s] - model.residuals[s] + c.mean);
      model.fitted_sd.push_back(c.variance.cwiseSqrt());
    }
  }
  return model;
}

const char* prediction_type_name(PredictionType type) {
  switch (type) {
    case PredictionType::TypeI:
      return "typeI";
    case PredictionType::TypeII:
      return "typeII";
    case PredictionType::MeanOnly:
      return "meanOnly";
  }
  return "";
}

namespace {

Vector mean_at(const GPFRModel& model, const Vector& tstar, const PredictionCovariates& cov) {
  return fr_mean_eval(model.fr, cov.u, cov.fx, tstar);
}

}  // namespace

GPFRPrediction gpfr_predict_type1(const GPFRModel& model, const NewCurve& observed,
                                  const Vector& tstar, const PredictionCovariates& cov,
                                  bool noise_free) {
  require(observed.t.size() >= 1 && observed.t.size() == observed.y.size(),
          "Type I prediction needs observations of the new curve");
  require(observed.y.allFinite() && observed.t.allFinite() && tstar.allFinite(),
          "Type I prediction: non-finite inputs");
  GPFRPrediction out;
  out.type = PredictionType::TypeI;
  out.mean_part = mean_at(model, tstar, cov);
  const Vector obs_mean = fr_mean_eval(model.fr, cov.u, observed.fx, observed.t);
  const Vector resid = observed.y - obs_mean;
  const Matrix obs_inputs = model.gp_inputs(observed.t, observed.gpx);
  const Matrix star_inputs = model.gp_inputs(tstar, cov.gpx);
  const auto& gp = model.gp;
  const Conditional c =
      gp_condition(gp.spec(), gp.hyper(), obs_inputs, resid, star_inputs, noise_free);
  out.result.grid = tstar;
  out.result.mean = out.mean_part + c.mean;
  out.result.sd = c.variance.cwiseSqrt();
  out.result.noise_free = noise_free;
  return out;
}

void mixture_moments(const Matrix& means, const Matrix& variances, const Vector& weights,
                     Vector& mean, Vector& variance) {
  require(means.rows() == variances.rows() && means.cols() == variances.cols() &&
              means.cols() == weights.size(),
          "mixture: shape mismatch");
  mean = means * weights;
  const Vector within = variances * weights;
  const Vector second = means.array().square().matrix() * weights;
  // The dispersion term is a variance of means; clamp roundoff below zero.
  variance = within + (second - mean.array().square().matrix()).cwiseMax(0.0);
}

GPFRPrediction gpfr_predict_type2(const GPFRModel& model, const Vector& tstar,
                                  const PredictionCovariates& cov, bool noise_free,
                                  bool mean_only) {
  require(tstar.allFinite(), "Type II prediction: non-finite inputs");
  GPFRPrediction out;
  out.mean_part = mean_at(model, tstar, cov);
  const Matrix star_inputs = model.gp_inputs(tstar, cov.gpx);
  const auto& gp = model.gp;
  out.result.grid = tstar;
  out.result.noise_free = noise_free;
  if (mean_only) {
    out.type = PredictionType::MeanOnly;
    Vector var = cov_diagonal(gp.spec(), gp.hyper(), star_inputs);
    if (!noise_free) var.array() += std::exp(gp.hyper().noise_log_var());
    out.result.mean = out.mean_part;
    out.result.sd = var.cwiseSqrt();
    return out;
  }
  out.type = PredictionType::TypeII;
  const Index m = gp.train().realizations();
  out.component_mean.resize(tstar.size(), m);
  out.component_variance.resize(tstar.size(), m);
  for (Index i = 0; i < m; ++i) {
    const Conditional c = gp_condition(gp.spec(), gp.hyper(), gp.train().inputs(i), gp.factor(i),
                                       gp.alpha(i), star_inputs, noise_free);
    out.component_mean.col(i) = out.mean_part + c.mean;
    out.component_variance.col(i) = c.variance;
  }
  Vector var;
  mixture_moments(out.component_mean, out.component_variance,
                  Vector::Constant(m, 1.0 / static_cast<double>(m)), out.result.mean, var);
  out.result.sd = var.cwiseSqrt();
  return out;
}

}  // namespace fungp
