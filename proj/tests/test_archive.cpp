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
#include <limits>
#include <random>

#include "fungp/archive.hpp"
#include "fungp/simulate.hpp"
#include "test_util.hpp"

using namespace fungp;
using nlohmann::json;
using fungp::testing::uniform_matrix;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Through text, as a file would be.
AnyModel round_trip(const AnyModel& m) { return archive_model(json::parse(archive_json(m).dump(2))); }

double max_gap(const PredictionResult& a, const PredictionResult& b) {
  return std::max((a.mean - b.mean).cwiseAbs().maxCoeff(), (a.sd - b.sd).cwiseAbs().maxCoeff());
}

GPModel small_gp(double noise) {
  KernelSpec spec;
  spec.terms = {KernelFamily::PowEx, KernelFamily::Linear};
  HyperParams hp{Vector(5)};
  hp.values << 0.1, 2.5, -1.0, -2.0, noise;  // pow.ex {v, w}, linear {a0, a1}, noise
  const Matrix x = Vector::LinSpaced(15, 0.0, 1.0);
  const GPSample s = simulate_gp(spec, hp, x, 2, Vector(), 9);
  const Dataset d = Dataset::shared(x, s.responses);
  return GPModel(spec, hp, mean_fit(d, MeanKind::Linear), d);
}

}  // namespace

TEST(Archive, NumbersAndMatricesEncodeExactly) {
  std::mt19937_64 rng(1);
  const Matrix m = uniform_matrix(3, 4, rng, -1e3, 1e3);
  EXPECT_EQ(from_json_matrix(json::parse(to_json_matrix(m).dump())), m);
  EXPECT_EQ(from_json_number(to_json_number(kNegInf)), kNegInf);
  EXPECT_TRUE(std::isnan(from_json_number(to_json_number(std::nan("")))));
  const Matrix empty(0, 2);
  EXPECT_EQ(from_json_matrix(to_json_matrix(empty)).cols(), 2);
  EXPECT_THROW(from_json_number(json("x")), ValidationError);
}

TEST(Archive, GPRoundTripPredictsIdentically) {
  for (double noise : {std::log(0.01), kNegInf}) {
    const GPModel m = small_gp(noise);
    const AnyModel back = round_trip(m);
    const auto& g = std::get<GPModel>(back);
    const Matrix ts = Vector::LinSpaced(31, -0.2, 1.2);
    for (bool nf : {false, true}) {
      PredictOptions o;
      o.noise_free = nf;
      o.realization = 1;
      EXPECT_LE(max_gap(predict(m, ts, o), predict(g, ts, o)), 1e-12);
    }
    EXPECT_EQ(g.hyper().values, m.hyper().values);
    EXPECT_EQ(g.mean().coefficients, m.mean().coefficients);
  }
}

TEST(Archive, RaggedFittedGPRoundTrip) {
  KernelSpec spec;
  spec.terms = {KernelFamily::Matern};
  spec.nu = 2.5;
  std::mt19937_64 rng(3);
  std::vector<Realization> rs;
  for (int m = 0; m < 3; ++m) {
    const Matrix x = uniform_matrix(12 + m, 1, rng);
    rs.push_back({x, (3.0 * x.col(0)).array().sin().matrix() + 0.05 * fungp::testing::normal_vector(x.rows(), rng)});
  }
  const Dataset d = Dataset::ragged(rs);
  FitOptions f;
  f.restarts = 2;
  f.seed = 4;
  const GPModel m = fit(d, spec, mean_fit(d, MeanKind::Zero), f);
  const AnyModel back = round_trip(m);
  const auto& g = std::get<GPModel>(back);
  const Matrix ts = Vector::LinSpaced(20, 0.0, 1.0);
  for (Index r = 0; r < 3; ++r) {
    PredictOptions o;
    o.realization = r;
    EXPECT_LE(max_gap(predict(m, ts, o), predict(g, ts, o)), 1e-12);
  }
  EXPECT_EQ(g.report().log_likelihood, m.report().log_likelihood);
}

TEST(Archive, NSGPRRoundTrip) {
  std::mt19937_64 rng(6);
  VaryingCoeffs c = VaryingCoeffs::constant(2, {0, 1}, 4, Vector::Zero(2), Vector::Ones(2), {false, true}, 0.0,
                                            Vector::Zero(2), Vector::Zero(1), std::log(0.01));
  c.log_sigma = 0.3 * fungp::testing::normal_vector(c.surface_size(), rng);
  c.log_radius = -1.0 + 0.3 * uniform_matrix(c.surface_size(), 2, rng).array();
  c.angle = uniform_matrix(c.surface_size(), 1, rng);
  NSCorrelation corr;
  corr.family = KernelFamily::Matern;
  corr.nu = 2.5;
  const Matrix x = uniform_matrix(25, 2, rng);
  const Matrix y = uniform_matrix(25, 1, rng);
  const NSGPRModel m(corr, c, MeanModel{}, Dataset::shared(x, y));
  const AnyModel back = round_trip(m);
  const auto& g = std::get<NSGPRModel>(back);
  const Matrix ts = uniform_matrix(30, 2, rng);
  EXPECT_LE(max_gap(nsgpr_predict(m, ts), nsgpr_predict(g, ts)), 1e-12);
  EXPECT_EQ(g.coeffs().cyclic, c.cyclic);
  EXPECT_EQ(ns_pack(g.coeffs()), ns_pack(c));
}

TEST(Archive, MGPRRoundTrip) {
  MGPRHyper hp = MGPRHyper::zeros(2, 1);
  hp.values << 0.0, std::log(80.0), -1.0, std::log(300.0), std::log(0.02),  //
      kNegInf, std::log(50.0), 0.2, std::log(200.0), std::log(0.03);
  const std::vector<Matrix> inputs{Vector::LinSpaced(20, 0, 1), Vector::LinSpaced(15, 0, 1)};
  const MGPRSample s = simulate_mgpr(hp, inputs, 2, {}, 8);
  std::vector<MeanModel> means(2);
  means[1].kind = MeanKind::Constant;
  means[1].coefficients = Vector::Constant(1, 0.7);
  const MGPRModel m(hp, means, s.data);
  const AnyModel back = round_trip(m);
  const auto& g = std::get<MGPRModel>(back);
  EXPECT_EQ(g.hyper().values.head(5), hp.values.head(5));
  EXPECT_EQ(g.hyper().log_shared_scale(1), kNegInf);
  const auto obs = mgpr_training_observations(m, 1);
  const std::vector<Matrix> ts{Vector::LinSpaced(9, 0, 1), Vector::LinSpaced(7, 0, 1)};
  const auto a = mgpr_predict(m, obs, ts), b = mgpr_predict(g, mgpr_training_observations(g, 1), ts);
  for (size_t j = 0; j < 2; ++j) EXPECT_LE(max_gap(a[j], b[j]), 1e-12);
}

TEST(Archive, GPFRRoundTrip) {
  const GPFRExample ex = simulate_gpfr_example(12, 6, 20, 20);
  GPFRData d;
  d.t = ex.train.t;
  d.y = ex.train.y;
  d.u = ex.train.u;
  d.gpx = ex.train.x;
  GPFROptions o;
  o.kernel = ex.kernel;
  o.fixed = ex.truth;
  o.fitting = true;
  const GPFRModel m = gpfr_fit(d, o);
  const AnyModel back = round_trip(m);
  const auto& g = std::get<GPFRModel>(back);
  const PredictionCovariates cov{ex.u_new, {}, {ex.x_new}};
  const NewCurve obs{ex.t_new.head(8), ex.y_new.head(8), {}, {ex.x_new.head(8)}};
  EXPECT_LE(max_gap(gpfr_predict_type1(m, obs, ex.t_new, cov).result,
                    gpfr_predict_type1(g, obs, ex.t_new, cov).result),
            1e-12);
  EXPECT_LE(max_gap(gpfr_predict_type2(m, ex.t_new, cov).result, gpfr_predict_type2(g, ex.t_new, cov).result),
            1e-12);
  ASSERT_EQ(g.fitted_sd.size(), m.fitted_sd.size());
  EXPECT_EQ(g.fitted_sd[2], m.fitted_sd[2]);
}

TEST(Archive, TamperedOrForeignArchivesAreRejected) {
  const json a = archive_json(small_gp(std::log(0.01)));
  EXPECT_EQ(a["kind"], "gpr");
  EXPECT_EQ(a["fingerprint"]["rows"], 15);
  EXPECT_EQ(a["theta"]["natural"][0].get<double>(), std::exp(0.1));

  json tampered = a;
  tampered["model"]["train"]["responses"]["data"][4] = 123.0;
  EXPECT_THROW(archive_model(tampered), ValidationError);
  json version = a;
  version["version"] = 99;
  EXPECT_THROW(archive_model(version), ValidationError);
  json foreign = a;
  foreign["format"] = "other";
  EXPECT_THROW(archive_model(foreign), ValidationError);
  json kind = a;
  kind["kind"] = "svm";
  EXPECT_THROW(archive_model(kind), ValidationError);
  json missing = a;
  missing["model"].erase("kernel");
  EXPECT_THROW(archive_model(missing), ValidationError);
}

TEST(Archive, EncodingIsDeterministic) {
  const GPModel m = small_gp(std::log(0.05));
  const std::string first = archive_json(m).dump(2);
  EXPECT_EQ(first, archive_json(std::get<GPModel>(archive_model(json::parse(first)))).dump(2));
}
