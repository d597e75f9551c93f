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

#include <string>
#include <vector>

#include "fungp/gpfr.hpp"
#include "fungp/gpr.hpp"
#include "fungp/mgpr.hpp"

namespace fungp {

/// Numeric CSV with a header row. Every cell must be a finite number.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<Index> lines;  // 1-based file line of each row

  Index rows_count() const { return static_cast<Index>(rows.size()); }
  /// Column position; ValidationError naming the file if absent.
  Index column(const std::string& name) const;
  Vector values(const std::string& name) const;
  Matrix columns(const std::vector<std::string>& names) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite.
std::string format_number(double value);

/// Writes rows of preformatted cells with LF line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Shared-grid data: input columns and one response column per realization.
Dataset ingest_dataset(const CsvTable& table, const std::vector<std::string>& inputs,
                       const std::vector<std::string>& responses);

/// Multi-output data keyed by an integer output-id column with ids 1..p.
/// Rows keep their file order within each output.
MultiDataset ingest_multi(const CsvTable& table, const std::string& output_column,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& responses);

/// Rows grouped by output id (1..outputs); outputs without rows stay empty.
/// With an empty response column only the inputs are read.
std::vector<OutputObservations> ingest_output_rows(const CsvTable& table,
                                                   const std::string& output_column,
                                                   const std::vector<std::string>& inputs,
                                                   const std::string& response, Index outputs);

struct GPFRLayout {
  std::string curve = "curve";
  std::string time = "t";
  std::string response = "y";
  std::vector<std::string> scalars;          // constant within a curve
  std::vector<std::string> mean_functional;  // functional covariates of the mean
  std::vector<std::string> gp_functional;    // functional covariates of the GP
};

/// Long-format curves: one row per (curve, t). Curves are ordered by first
/// appearance of their id.
GPFRData ingest_gpfr(const CsvTable& table, const GPFRLayout& layout);

/// Rows of one new curve: time, optionally response, scalar and functional
/// covariate columns. Scalars must be constant.
struct CurveRows {
  Vector t;
  Vector y;  // empty unless with_response
  Vector u;
  std::vector<Vector> fx;
  std::vector<Vector> gpx;
};
CurveRows ingest_curve(const CsvTable& table, const GPFRLayout& layout, bool with_response,
                       bool with_scalars);

}  // namespace fungp
