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

#include "fungp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fungp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string where(const CsvTable& t, Index row, Index col) {
  return t.source + " line " + std::to_string(t.lines[static_cast<size_t>(row)]) + ", column '" +
         t.header[static_cast<size_t>(col)] + "'";
}

Index integer_id(const CsvTable& t, Index row, Index col) {
  const double v = t.rows[static_cast<size_t>(row)][static_cast<size_t>(col)];
  require(v == std::floor(v) && std::abs(v) < 1e15, where(t, row, col) + ": expected an integer id");
  return static_cast<Index>(v);
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Index>(i);
  throw ValidationError(source + ": missing column '" + name + "'");
}

Vector CsvTable::values(const std::string& name) const {
  const auto c = static_cast<size_t>(column(name));
  Vector v(rows_count());
  for (Index r = 0; r < rows_count(); ++r) v(r) = rows[static_cast<size_t>(r)][c];
  return v;
}

Matrix CsvTable::columns(const std::vector<std::string>& names) const {
  Matrix m(rows_count(), static_cast<Index>(names.size()));
  for (size_t j = 0; j < names.size(); ++j) m.col(static_cast<Index>(j)) = values(names[j]);
  return m;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  Index number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!have_header) {
      for (const auto& c : cells) {
        const std::string name = unquote(c);
        require(!name.empty(), source + " line " + std::to_string(number) + ": empty column name");
        for (const auto& h : t.header)
          require(h != name, source + ": duplicate column '" + name + "'");
        t.header.push_back(name);
      }
      have_header = true;
      continue;
    }
    require(cells.size() == t.header.size(),
            source + " line " + std::to_string(number) + ": expected " +
                std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::string context =
          source + " line " + std::to_string(number) + ", column '" + t.header[c] + "'";
      const std::string& cell = cells[c];
      require(!cell.empty(), context + ": empty cell");
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (*first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      require(res.ec == std::errc() && res.ptr == last, context + ": non-numeric cell '" + cell + "'");
      require(std::isfinite(v), context + ": non-finite value '" + cell + "'");
      row[c] = v;
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(number);
  }
  require(have_header, source + ": missing header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write '" + path + "'");
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  require(out.good(), "failed writing '" + path + "'");
}

Dataset ingest_dataset(const CsvTable& table, const std::vector<std::string>& inputs,
                       const std::vector<std::string>& responses) {
  require(!inputs.empty(), table.source + ": layout needs at least one input column");
  require(!responses.empty(), table.source + ": layout needs at least one response column");
  require(table.rows_count() >= 1, table.source + ": no data rows");
  return Dataset::shared(table.columns(inputs), table.columns(responses));
}

MultiDataset ingest_multi(const CsvTable& table, const std::string& output_column,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& responses) {
  require(!inputs.empty() && !responses.empty(),
          table.source + ": layout needs input and response columns");
  const Index oc = table.column(output_column);
  Index p = 0;
  for (Index r = 0; r < table.rows_count(); ++r) {
    const Index id = integer_id(table, r, oc);
    require(id >= 1, where(table, r, oc) + ": output ids start at 1");
    p = std::max(p, id);
  }
  std::vector<std::vector<Index>> rows(static_cast<size_t>(p));
  for (Index r = 0; r < table.rows_count(); ++r)
    rows[static_cast<size_t>(integer_id(table, r, oc) - 1)].push_back(r);
  const Matrix in = table.columns(inputs), resp = table.columns(responses);
  MultiDataset data;
  for (Index j = 0; j < p; ++j) {
    const auto& idx = rows[static_cast<size_t>(j)];
    require(!idx.empty(), table.source + ": output id " + std::to_string(j + 1) + " has no rows");
    Matrix ti(static_cast<Index>(idx.size()), in.cols()), yi(static_cast<Index>(idx.size()), resp.cols());
    for (size_t k = 0; k < idx.size(); ++k) {
      ti.row(static_cast<Index>(k)) = in.row(idx[k]);
      yi.row(static_cast<Index>(k)) = resp.row(idx[k]);
    }
    data.inputs.push_back(std::move(ti));
    data.responses.push_back(std::move(yi));
  }
  data.validate();
  return data;
}

std::vector<OutputObservations> ingest_output_rows(const CsvTable& table,
                                                   const std::string& output_column,
                                                   const std::vector<std::string>& inputs,
                                                   const std::string& response, Index outputs) {
  const Index oc = table.column(output_column);
  const Matrix in = table.columns(inputs);
  const Vector y = response.empty() ? Vector::Zero(table.rows_count()) : table.values(response);
  std::vector<OutputObservations> out(static_cast<size_t>(outputs));
  for (auto& o : out) o.inputs.resize(0, in.cols());
  for (Index r = 0; r < table.rows_count(); ++r) {
    const Index id = integer_id(table, r, oc);
    require(id >= 1 && id <= outputs, where(table, r, oc) + ": output id must lie in 1.." +
                                          std::to_string(outputs));
    auto& o = out[static_cast<size_t>(id - 1)];
    o.inputs.conservativeResize(o.inputs.rows() + 1, in.cols());
    o.inputs.row(o.inputs.rows() - 1) = in.row(r);
    o.response.conservativeResize(o.response.size() + 1);
    o.response(o.response.size() - 1) = y(r);
  }
  return out;
}

GPFRData ingest_gpfr(const CsvTable& table, const GPFRLayout& layout) {
  require(table.rows_count() >= 1, table.source + ": no data rows");
  const Index cc = table.column(layout.curve);
  const Vector t = table.values(layout.time), y = table.values(layout.response);
  const Matrix u = table.columns(layout.scalars);
  const Matrix fx = table.columns(layout.mean_functional);
  const Matrix gx = table.columns(layout.gp_functional);
  std::map<Index, size_t> order;
  std::vector<std::vector<Index>> rows;
  for (Index r = 0; r < table.rows_count(); ++r) {
    const Index id = integer_id(table, r, cc);
    auto it = order.find(id);
    if (it == order.end()) {
      it = order.emplace(id, rows.size()).first;
      rows.emplace_back();
    }
    rows[it->second].push_back(r);
  }
  GPFRData data;
  const auto m = static_cast<Index>(rows.size());
  data.u.resize(m, u.cols());
  data.fx.assign(static_cast<size_t>(fx.cols()), {});
  data.gpx.assign(static_cast<size_t>(gx.cols()), {});
  for (Index c = 0; c < m; ++c) {
    const auto& idx = rows[static_cast<size_t>(c)];
    const auto n = static_cast<Index>(idx.size());
    Vector tc(n), yc(n);
    Matrix fc(n, fx.cols()), gc(n, gx.cols());
    for (Index k = 0; k < n; ++k) {
      const Index r = idx[static_cast<size_t>(k)];
      tc(k) = t(r);
      yc(k) = y(r);
      fc.row(k) = fx.row(r);
      gc.row(k) = gx.row(r);
      for (Index s = 0; s < u.cols(); ++s)
        require(u(r, s) == u(idx.front(), s),
                where(table, r, table.column(layout.scalars[static_cast<size_t>(s)])) +
                    ": scalar covariate changes within a curve");
    }
    if (u.cols() > 0) data.u.row(c) = u.row(idx.front());
    data.t.push_back(tc);
    data.y.push_back(yc);
    for (Index k = 0; k < fx.cols(); ++k) data.fx[static_cast<size_t>(k)].push_back(fc.col(k));
    for (Index k = 0; k < gx.cols(); ++k) data.gpx[static_cast<size_t>(k)].push_back(gc.col(k));
  }
  return data;
}

CurveRows ingest_curve(const CsvTable& table, const GPFRLayout& layout, bool with_response,
                       bool with_scalars) {
  require(table.rows_count() >= 1, table.source + ": no data rows");
  CurveRows c;
  c.t = table.values(layout.time);
  if (with_response) c.y = table.values(layout.response);
  if (with_scalars) {
    const Matrix u = table.columns(layout.scalars);
    for (Index r = 1; r < u.rows(); ++r)
      for (Index s = 0; s < u.cols(); ++s)
        require(u(r, s) == u(0, s),
                where(table, r, table.column(layout.scalars[static_cast<size_t>(s)])) +
                    ": scalar covariate changes within the curve");
    c.u = u.rows() > 0 ? Vector(u.row(0).transpose()) : Vector(u.cols());
  }
  for (const auto& name : layout.mean_functional) c.fx.push_back(table.values(name));
  for (const auto& name : layout.gp_functional) c.gpx.push_back(table.values(name));
  return c;
}

}  // namespace fungp
