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

#include <string>
#include <variant>

#include "fungp/gpfr.hpp"
#include "fungp/gpr.hpp"
#include "fungp/mgpr.hpp"
#include "fungp/nsgpr.hpp"

namespace fungp {

using AnyModel = std::variant<GPModel, NSGPRModel, MGPRModel, GPFRModel>;

inline constexpr const char* kArchiveFormat = "fungp-archive";
inline constexpr int kArchiveVersion = 1;

/// "gpr", "nsgpr", "mgpr" or "gpfr".
std::string model_kind(const AnyModel& model);

/// JSON encoding helpers. Non-finite doubles are written as the strings
/// "inf", "-inf" and "nan"; matrices as {rows, cols, data (row-major)}.
nlohmann::json to_json_number(double v);
double from_json_number(const nlohmann::json& j);
nlohmann::json to_json_vector(const Vector& v);
Vector from_json_vector(const nlohmann::json& j);
nlohmann::json to_json_matrix(const Matrix& m);
Matrix from_json_matrix(const nlohmann::json& j);

/// {"correlation", "coefficients"} of a nonstationary kernel.
nlohmann::json ns_coefficients_json(const NSCorrelation& corr, const VaryingCoeffs& c);

/// Row count and FNV-1a hash over the training inputs and responses.
struct Fingerprint {
  Index rows = 0;
  std::string hash;
};
Fingerprint fingerprint(const AnyModel& model);

/// Names and log/natural values of the estimated parameters.
nlohmann::json theta_json(const AnyModel& model);
nlohmann::json fit_report_json(const FitReport& report);

/// Self-contained archive: kind, version, model definition, parameters on
/// both scales, mean model, basis coefficients, training data and its
/// fingerprint. `metadata` is stored verbatim (e.g. column layout).
nlohmann::json archive_json(const AnyModel& model, const nlohmann::json& metadata = {});
/// Rebuilds the model; ValidationError on a bad tag, version or fingerprint.
AnyModel archive_model(const nlohmann::json& archive);

void save_archive(const std::string& path, const AnyModel& model,
                  const nlohmann::json& metadata = {});
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace fungp
