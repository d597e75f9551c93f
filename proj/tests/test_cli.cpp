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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "fungp/cli.hpp"
#include "fungp/io.hpp"

using namespace fungp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fungp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(json config, const std::string& out = "", std::string* err = nullptr) {
    cli::RunOptions o;
    o.output_dir = out.empty() ? dir_.string() : path(out);
    std::ostringstream e;
    const int code = cli::run(config, o, e);
    if (err) *err = e.str();
    return code;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  json simulate_gpr() const {
    return {{"command", "simulate"},
            {"model", "gpr"},
            {"seed", 1},
            {"kernel", {{"terms", {"pow.ex"}}}},
            {"simulate", {{"grid", {{"lo", 0}, {"hi", 1}, {"n", 60}}}, {"theta", {0.0, std::log(30.0), std::log(0.01)}}}}};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GprPipelineRecoversLatentAndIsDeterministic) {
  ASSERT_EQ(run(simulate_gpr()), 0);
  const json fit = {{"command", "fit"},
                    {"model", "gpr"},
                    {"seed", 1},
                    {"kernel", {{"terms", {"pow.ex"}}}},
                    {"paths", {{"data", path("data.csv")}}}};
  ASSERT_EQ(run(fit), 0);
  const json predict = {{"command", "predict"},
                        {"model", "gpr"},
                        {"paths", {{"archive", path("model.json")}, {"new_data", path("latent.csv")}}},
                        {"predict", {{"noise_free", true}}}};
  fs::create_directories(path("a"));
  fs::create_directories(path("b"));
  ASSERT_EQ(run(predict, "a"), 0);
  ASSERT_EQ(run(predict, "b"), 0);
  const std::string first = slurp(path("a/predictions.csv"));
  EXPECT_EQ(first, slurp(path("b/predictions.csv")));

  std::istringstream lines(first);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "t,mean,sd,noiseFree");
  std::ostringstream numeric;
  numeric << "t,mean,sd\n";
  for (std::string line; std::getline(lines, line);) {
    EXPECT_EQ(line.substr(line.size() - 5), ",true");
    numeric << line.substr(0, line.rfind(',')) << '\n';
  }
  const CsvTable p = parse_csv(numeric.str(), "predictions.csv");
  const CsvTable latent = read_csv(path("latent.csv"));
  const Vector mean = p.values("mean"), sd = p.values("sd"), truth = latent.values("y1");
  ASSERT_EQ(mean.size(), 60);
  Index inside = 0;
  for (Index i = 0; i < mean.size(); ++i) inside += std::abs(mean(i) - truth(i)) <= 3.0 * sd(i);
  EXPECT_GE(inside, 57);  // 95% of 60

  // Same config and seed reproduce every artifact except the timing file.
  const std::string model = slurp(path("model.json")), report = slurp(path("fit_report.json"));
  const std::string data = slurp(path("data.csv"));
  ASSERT_EQ(run(simulate_gpr(), "a"), 0);
  EXPECT_EQ(slurp(path("a/data.csv")), data);
  ASSERT_EQ(run(fit, "a"), 0);
  EXPECT_EQ(slurp(path("a/model.json")), model);
  EXPECT_EQ(slurp(path("a/fit_report.json")), report);
  const json rep = json::parse(report);
  EXPECT_TRUE(rep["converged"].get<bool>());
  EXPECT_EQ(rep["theta"]["names"].size(), 3u);
  EXPECT_TRUE(json::parse(slurp(path("timing.json"))).contains("runtime_seconds"));
}

TEST_F(CliTest, SeedOverrideChangesSimulation) {
  ASSERT_EQ(run(simulate_gpr()), 0);
  const std::string base = slurp(path("data.csv"));
  cli::RunOptions o;
  o.output_dir = path("s");
  o.seed = 2;
  std::ostringstream err;
  ASSERT_EQ(cli::run(simulate_gpr(), o, err), 0);
  EXPECT_NE(slurp(path("s/data.csv")), base);
  EXPECT_EQ(json::parse(slurp(path("s/parameters.json")))["seed"], 2);
}

TEST_F(CliTest, GpfrPredictionTypeFollowsObservations) {
  ASSERT_EQ(run({{"command", "simulate"}, {"model", "gpfr"}, {"seed", 3}, {"simulate", {{"curves", 8}, {"points", 25}}}}), 0);
  const json layout = {{"scalars", {"u1", "u2"}}, {"gp_functional", {"x"}}};
  ASSERT_EQ(run({{"command", "fit"},
                 {"model", "gpfr"},
                 {"seed", 3},
                 {"paths", {{"data", path("data.csv")}}},
                 {"layout", layout},
                 {"kernel", {{"terms", {"pow.ex"}}, {"gamma", 1.0}}},
                 {"fit", {{"restarts", 2}}}}),
            0);
  // First ten new-curve points as the observed part.
  std::istringstream in(slurp(path("new_curve.csv")));
  std::string obs, line;
  for (int i = 0; i < 11 && std::getline(in, line); ++i) obs += line + "\n";
  write("obs.csv", obs);
  json predict = {{"command", "predict"},
                  {"model", "gpfr"},
                  {"paths", {{"archive", path("model.json")}, {"new_data", path("new_curve.csv")}}}};
  ASSERT_EQ(run(predict, "two"), 0);
  predict["paths"]["observations"] = path("obs.csv");
  ASSERT_EQ(run(predict, "one"), 0);
  auto types = [&](const std::string& file) {
    std::istringstream s(slurp(file));
    std::string l;
    std::getline(s, l);
    EXPECT_EQ(l, "t,mean,sd,noiseFree,predictionType");
    std::set<std::string> seen;
    while (std::getline(s, l)) seen.insert(l.substr(l.rfind(',') + 1));
    return seen;
  };
  EXPECT_EQ(types(path("one/predictions.csv")), std::set<std::string>{"typeI"});
  EXPECT_EQ(types(path("two/predictions.csv")), std::set<std::string>{"typeII"});

  json plot = predict;
  plot["command"] = "export-plot-data";
  ASSERT_EQ(run(plot), 0);
  const std::string exported = slurp(path("plot_data.csv"));
  EXPECT_EQ(exported.substr(0, exported.find('\n')), "series,curve,output,t,value,lo,hi");
  EXPECT_NE(exported.find("prediction:typeI,new"), std::string::npos);
  EXPECT_NE(exported.find("fitted,8,"), std::string::npos);
}

TEST_F(CliTest, MgprWithOutputColumnAndPerOutputFiles) {
  ASSERT_EQ(run({{"command", "simulate"},
                 {"model", "mgpr"},
                 {"seed", 5},
                 {"simulate", {{"example", true}, {"realizations", 2}, {"points", 30}}}}),
            0);
  ASSERT_EQ(run({{"command", "fit"},
                 {"model", "mgpr"},
                 {"seed", 5},
                 {"paths", {{"data", path("data.csv")}}},
                 {"fit", {{"mean", "linear"}, {"restarts", 1}}}}),
            0);
  write("new.csv", "output,t\n3,0.5\n1,0.25\n1,0.75\n");
  ASSERT_EQ(run({{"command", "predict"},
                 {"model", "mgpr"},
                 {"paths", {{"archive", path("model.json")}, {"new_data", path("new.csv")}}},
                 {"predict", {{"realization", 2}}}}),
            0);
  std::istringstream p(slurp(path("predictions.csv")));
  std::string l;
  std::getline(p, l);
  EXPECT_EQ(l, "output,t,mean,sd,noiseFree");
  std::getline(p, l);
  EXPECT_EQ(l.substr(0, 7), "1,0.25,");
  std::getline(p, l);
  EXPECT_EQ(l.substr(0, 7), "1,0.75,");
  std::getline(p, l);
  EXPECT_EQ(l.substr(0, 6), "3,0.5,");

  // Split the long file into one file per output and fit again.
  const CsvTable all = read_csv(path("data.csv"));
  json files = json::array();
  for (int j = 1; j <= 3; ++j) {
    std::string text = "t,y1,y2\n";
    for (const auto& row : all.rows)
      if (row[0] == j) text += format_number(row[1]) + "," + format_number(row[2]) + "," + format_number(row[3]) + "\n";
    write("out" + std::to_string(j) + ".csv", text);
    files.push_back(path("out" + std::to_string(j) + ".csv"));
  }
  fs::create_directories(path("split"));
  ASSERT_EQ(run({{"command", "fit"},
                 {"model", "mgpr"},
                 {"seed", 5},
                 {"paths", {{"data", files}}},
                 {"fit", {{"mean", "linear"}, {"restarts", 1}}}},
                "split"),
            0);
  EXPECT_EQ(json::parse(slurp(path("split/model.json")))["fingerprint"],
            json::parse(slurp(path("model.json")))["fingerprint"]);
}

TEST_F(CliTest, NsgprPipeline) {
  ASSERT_EQ(run({{"command", "simulate"},
                 {"model", "nsgpr"},
                 {"seed", 6},
                 {"simulate",
                  {{"grid", {{"n", 30}}},
                   {"coefficients", {{"log_sigma", {-0.5, 0.0, 0.5, 0.5, 0.0}}, {"log_radius", {-2.0}}}}}}}),
            0);
  ASSERT_EQ(run({{"command", "fit"},
                 {"model", "nsgpr"},
                 {"seed", 6},
                 {"nsgpr", {{"nbasis", 5}}},
                 {"fit", {{"restarts", 1}}},
                 {"paths", {{"data", path("data.csv")}}}}),
            0);
  const json a = json::parse(slurp(path("model.json")));
  EXPECT_EQ(a["kind"], "nsgpr");
  EXPECT_EQ(a["theta"]["names"].size(), 11u);  // 5 sigma + 5 radius + noise
  ASSERT_EQ(run({{"command", "export-plot-data"}, {"model", "nsgpr"}, {"paths", {{"archive", path("model.json")}}}}), 0);
  std::istringstream e(slurp(path("plot_data.csv")));
  std::string l;
  int rows = 0;
  while (std::getline(e, l)) ++rows;
  EXPECT_EQ(rows, 1 + 30 + 30);
}

TEST_F(CliTest, ErrorPathsExitNonzeroWithOneJsonLine) {
  write("nan.csv", "t,y1\n0,1\n0.5,nan\n");
  write("notjson.json", "{ nope");
  const json kernel = {{"terms", {"pow.ex"}}};
  const std::vector<json> bad{
      json::array(),
      {{"command", "fit"}},
      {{"command", "train"}, {"model", "gpr"}},
      {{"command", "fit"}, {"model", "svm"}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"surplus", 1}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"fit", {{"restart", 2}}}},
      {{"command", "fit"}, {"model", "gpr"}, {"paths", {{"data", path("nan.csv")}}}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"paths", {{"data", path("nan.csv")}}}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"paths", {{"data", path("missing.csv")}}}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", {{"terms", {"spline"}}}}, {"paths", {{"data", "x"}}}},
      {{"command", "fit"}, {"model", "mgpr"}, {"kernel", kernel}, {"paths", {{"data", "x"}}}},
      {{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"fit", {{"restarts", "five"}}}},
      {{"command", "predict"}, {"model", "gpr"}, {"paths", {{"archive", path("notjson.json")}, {"new_data", "x"}}}},
      {{"command", "predict"}, {"model", "gpr"}},
      {{"command", "simulate"}, {"model", "gpr"}, {"kernel", kernel}},
      {{"command", "simulate"}, {"model", "gpr"}, {"kernel", kernel}, {"simulate", {{"theta", {0.0}}}}},
  };
  for (const auto& config : bad) {
    std::string err;
    EXPECT_EQ(run(config, "", &err), cli::kValidationFailure) << config.dump();
    ASSERT_FALSE(err.empty()) << config.dump();
    EXPECT_EQ(err.find('\n'), err.size() - 1) << err;
    const json reason = json::parse(err);
    EXPECT_EQ(reason["error"], "validation");
    EXPECT_FALSE(reason["message"].get<std::string>().empty());
  }

  // Optimizer capped at one iteration: no start converges.
  ASSERT_EQ(run(simulate_gpr()), 0);
  std::string err;
  EXPECT_EQ(run({{"command", "fit"},
                 {"model", "gpr"},
                 {"kernel", kernel},
                 {"fit", {{"max_iterations", 1}}},
                 {"paths", {{"data", path("data.csv")}}}},
                "", &err),
            cli::kNumericalFailure);
  EXPECT_EQ(json::parse(err)["error"], "numerical");

  // Archive of another kind.
  ASSERT_EQ(run({{"command", "fit"}, {"model", "gpr"}, {"kernel", kernel}, {"paths", {{"data", path("data.csv")}}}}), 0);
  EXPECT_EQ(run({{"command", "predict"},
                 {"model", "nsgpr"},
                 {"paths", {{"archive", path("model.json")}, {"new_data", path("latent.csv")}}}}),
            cli::kValidationFailure);

  cli::RunOptions o;
  o.threads = 0;
  std::ostringstream e;
  EXPECT_EQ(cli::run(simulate_gpr(), o, e), cli::kValidationFailure);
}
