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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace fungp::cli {

/// Process-level options from the command line. `seed` overrides the seed in
/// the config file.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output_dir = ".";
};

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kNumericalFailure = 2 };

/// Runs one command described by a JSON config. Throws ValidationError for a
/// bad config or input and NumericalError for numerical breakdown.
///
///   simulate          data.csv, latent.csv, parameters.json (+ new_curve.csv for gpfr)
///   fit               model.json, fit_report.json, timing.json
///   predict           predictions.csv
///   export-plot-data  plot_data.csv
void execute(const nlohmann::json& config, const RunOptions& options);

/// As execute, but maps failures to an exit code and writes a single-line
/// JSON reason {"error", "message"} to `err`.
int run(const nlohmann::json& config, const RunOptions& options, std::ostream& err);
int run_file(const std::string& config_path, const RunOptions& options, std::ostream& err);

}  // namespace fungp::cli
