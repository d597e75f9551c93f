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

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "fungp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fungp: Gaussian-process regression for functional data"};
  std::string config;
  std::optional<std::uint64_t> seed;
  fungp::cli::RunOptions options;
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Top-level seed; overrides the config");
  app.add_option("--threads", options.threads, "Worker threads (>= 1)")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", options.output_dir, "Directory for output files");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    for (auto& ch : message)
      if (ch == '\n') ch = ' ';
    std::cerr << nlohmann::json({{"error", "validation"}, {"message", message}, {"exit_code", 1}}).dump()
              << '\n';
    return fungp::cli::kValidationFailure;
  }
  options.seed = seed;
  return fungp::cli::run_file(config, options, std::cerr);
}
