/*
 * Copyright 2026 The pcplod Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "pcplod/data_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pcplod/error.hpp"

namespace pcplod {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based file line number of each row, for error messages.
  std::vector<std::size_t> line_numbers;
};

CsvTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw SchemaError(path.string() + ": missing header row");
  return table;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

double require_number(const std::string& cell, std::size_t row, std::size_t col,
                      const std::filesystem::path& path) {
  auto v = parse_number(cell);
  if (!v) throw ParseError(path.string() + ": malformed number '" + cell + "'", row, col);
  return *v;
}

void check_shape(const CsvTable& t, std::size_t p, const std::filesystem::path& path) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != p)
      throw SchemaError(path.string() + ": row at line " + std::to_string(t.line_numbers[r]) +
                        " has " + std::to_string(t.rows[r].size()) + " cells, expected " +
                        std::to_string(p));
  }
}

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

MaskedMatrix read_two_file(const std::filesystem::path& path, const MatrixSchema& schema) {
  auto values = load_table(path);
  auto status = load_table(status_path_for(path));
  auto delta = load_table(delta_path_for(path));
  const std::size_t p = values.header.size();
  if (!schema.expected_columns.empty() && values.header != schema.expected_columns)
    throw SchemaError(path.string() + ": header does not match schema");
  if (status.header != values.header || delta.header != values.header)
    throw SchemaError(path.string() + ": companion status/delta headers differ");
  check_shape(values, p, path);
  check_shape(status, p, status_path_for(path));
  check_shape(delta, p, delta_path_for(path));
  const std::size_t n = values.rows.size();
  if (status.rows.size() != n || delta.rows.size() != n)
    throw SchemaError(path.string() + ": companion files have a different row count");

  Matrix v(n, p), d(n, p);
  StatusGrid s(static_cast<Index>(n), static_cast<Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      EntryStatus st;
      try {
        st = parse_status_token(status.rows[i][j]);
      } catch (const Error&) {
        throw ParseError(status_path_for(path).string() + ": bad status token '" +
                             status.rows[i][j] + "'",
                         status.line_numbers[i], j + 1);
      }
      s(i, j) = st;
      d(i, j) = require_number(delta.rows[i][j], delta.line_numbers[i], j + 1,
                               delta_path_for(path));
      const auto& cell = values.rows[i][j];
      if (st == EntryStatus::Observed) {
        v(i, j) = require_number(cell, values.line_numbers[i], j + 1, path);
      } else {
        v(i, j) = kNaN;
      }
    }
  }
  return MaskedMatrix(std::move(v), std::move(s), std::move(d), values.header);
}

}  // namespace

char status_token(EntryStatus s) {
  switch (s) {
    case EntryStatus::Observed: return 'O';
    case EntryStatus::BelowLod: return 'L';
    case EntryStatus::Missing: return 'M';
  }
  return '?';
}

EntryStatus parse_status_token(std::string_view token) {
  if (token == "O") return EntryStatus::Observed;
  if (token == "L") return EntryStatus::BelowLod;
  if (token == "M") return EntryStatus::Missing;
  throw SchemaError("unknown status token '" + std::string(token) + "'");
}

Index StatusGrid::count(EntryStatus s) const {
  Index c = 0;
  for (auto v : data_) c += (v == s);
  return c;
}

MaskedMatrix::MaskedMatrix(Matrix values, StatusGrid status, Matrix delta,
                           std::vector<std::string> column_names)
    : values_(std::move(values)),
      status_(std::move(status)),
      delta_(std::move(delta)),
      names_(std::move(column_names)) {
  const Index n = values_.rows(), p = values_.cols();
  if (n < 1 || p < 1) throw SchemaError("matrix must have at least one row and column");
  if (status_.rows() != n || status_.cols() != p || delta_.rows() != n || delta_.cols() != p)
    throw SchemaError("values, status and delta dimensions disagree");
  if (names_.empty()) names_ = default_column_names(p);
  if (static_cast<Index>(names_.size()) != p)
    throw SchemaError("column name count does not match column count");
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) {
      switch (status_(i, j)) {
        case EntryStatus::Observed: {
          double x = values_(i, j);
          if (!std::isfinite(x))
            throw DomainError("non-finite observed value at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
          if (x < 0.0)
            throw DomainError("negative observed value at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
          break;
        }
        case EntryStatus::BelowLod:
          if (!(std::isfinite(delta_(i, j)) && delta_(i, j) > 0.0))
            throw SchemaError("below-LOD entry at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") needs a positive LOD");
          values_(i, j) = kNaN;
          break;
        case EntryStatus::Missing:
          values_(i, j) = kNaN;
          break;
      }
      if (!std::isfinite(delta_(i, j)) || delta_(i, j) < 0.0) delta_(i, j) = 0.0;
    }
  }
}

MaskedMatrix MaskedMatrix::observed(const Matrix& values, std::vector<std::string> column_names) {
  return MaskedMatrix(values, StatusGrid(values.rows(), values.cols()),
                      Matrix::Zero(values.rows(), values.cols()), std::move(column_names));
}

MaskedMatrix MaskedMatrix::with_missing(const std::vector<EntryIndex>& entries) const {
  StatusGrid s = status_;
  for (auto [i, j] : entries) s(i, j) = EntryStatus::Missing;
  MaskedMatrix out(values_, std::move(s), delta_, names_);
  out.scale_ = scale_;
  return out;
}

Matrix MaskedMatrix::warm_start() const {
  Matrix x0(rows(), cols());
  for (Index j = 0; j < cols(); ++j) {
    for (Index i = 0; i < rows(); ++i) {
      switch (status_(i, j)) {
        case EntryStatus::Observed: x0(i, j) = values_(i, j); break;
        case EntryStatus::BelowLod: x0(i, j) = 0.5 * delta_(i, j); break;
        case EntryStatus::Missing: x0(i, j) = 0.0; break;
      }
    }
  }
  return x0;
}

MaskedMatrix read_matrix_csv(const std::filesystem::path& path, const MatrixSchema& schema) {
  if (std::filesystem::exists(status_path_for(path)) &&
      std::filesystem::exists(delta_path_for(path)))
    return read_two_file(path, schema);

  auto table = load_table(path);
  const std::size_t p = table.header.size();
  if (!schema.expected_columns.empty() && table.header != schema.expected_columns)
    throw SchemaError(path.string() + ": header does not match schema");

  std::optional<std::vector<double>> lods;
  std::size_t first_data = 0;
  if (!table.rows.empty() && !table.rows[0].empty() && table.rows[0][0] == "#lod") {
    const auto& meta = table.rows[0];
    if (meta.size() != p + 1)
      throw SchemaError(path.string() + ": #lod row needs one value per column");
    lods.emplace(p);
    for (std::size_t j = 0; j < p; ++j) {
      if (meta[j + 1].empty()) {
        (*lods)[j] = kNaN;
        continue;
      }
      (*lods)[j] = require_number(meta[j + 1], table.line_numbers[0], j + 2, path);
    }
    first_data = 1;
  } else if (schema.require_lod_row) {
    throw SchemaError(path.string() + ": schema requires a #lod row");
  }

  const std::size_t n = table.rows.size() - first_data;
  if (n == 0) throw SchemaError(path.string() + ": no data rows");
  for (std::size_t r = first_data; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != p)
      throw SchemaError(path.string() + ": row at line " + std::to_string(table.line_numbers[r]) +
                        " has " + std::to_string(table.rows[r].size()) + " cells, expected " +
                        std::to_string(p));
  }

  Matrix v(n, p), d = Matrix::Zero(n, p);
  StatusGrid s(static_cast<Index>(n), static_cast<Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i + first_data];
    const auto line = table.line_numbers[i + first_data];
    for (std::size_t j = 0; j < p; ++j) {
      const double lod = lods ? (*lods)[j] : kNaN;
      const bool has_lod = std::isfinite(lod);
      if (has_lod) d(i, j) = lod;
      const auto& cell = row[j];
      if (cell == "<LOD" || (cell.empty() && schema.empty_is_below_lod && has_lod)) {
        if (!has_lod || lod <= 0.0)
          throw SchemaError(path.string() + ": below-LOD cell without a positive LOD at line " +
                            std::to_string(line) + ", column " + std::to_string(j + 1));
        s(i, j) = EntryStatus::BelowLod;
        v(i, j) = kNaN;
      } else if (is_missing_token(cell)) {
        s(i, j) = EntryStatus::Missing;
        v(i, j) = kNaN;
      } else {
        double x = require_number(cell, line, j + 1, path);
        if (x < 0.0)
          throw DomainError(path.string() + ": negative value at line " + std::to_string(line) +
                            ", column " + std::to_string(j + 1));
        v(i, j) = x;
      }
    }
  }
  return MaskedMatrix(std::move(v), std::move(s), std::move(d), table.header);
}

Matrix read_numeric_csv(const std::filesystem::path& path, std::vector<std::string>* column_names) {
  auto table = load_table(path);
  const std::size_t p = table.header.size();
  check_shape(table, p, path);
  Matrix m(table.rows.size(), p);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < p; ++j)
      m(i, j) = require_number(table.rows[i][j], table.line_numbers[i], j + 1, path);
  if (column_names) *column_names = table.header;
  return m;
}

std::string format_double(double x) {
  if (x == 0.0) return "0";
  if (std::isnan(x)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << names[j];
  }
  out << '\n';
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const std::vector<std::string>& column_names) {
  auto names = column_names.empty() ? default_column_names(m.cols()) : column_names;
  if (static_cast<Index>(names.size()) != m.cols())
    throw SchemaError("column name count does not match matrix");
  auto out = open_for_write(path);
  write_header(out, names);
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
  finish(out, path);
}

void write_masked_csv(const MaskedMatrix& m, const std::filesystem::path& path) {
  write_matrix_csv(m.values(), path, m.column_names());
  {
    auto sp = status_path_for(path);
    auto out = open_for_write(sp);
    write_header(out, m.column_names());
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << status_token(m.status(i, j));
      }
      out << '\n';
    }
    finish(out, sp);
  }
  write_matrix_csv(m.deltas(), delta_path_for(path), m.column_names());
}

void write_lod_csv(const MaskedMatrix& m, const std::filesystem::path& path) {
  std::vector<double> lods(static_cast<std::size_t>(m.cols()), kNaN);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m.status(i, j) != EntryStatus::BelowLod) continue;
      auto& lod = lods[static_cast<std::size_t>(j)];
      if (std::isnan(lod)) lod = m.delta(i, j);
      else if (lod != m.delta(i, j))
        throw SchemaError("column " + m.column_names()[static_cast<std::size_t>(j)] +
                          " has more than one LOD; use the two-file form");
    }
  }
  auto out = open_for_write(path);
  write_header(out, m.column_names());
  out << "#lod";
  for (double lod : lods) {
    out << ',';
    if (!std::isnan(lod)) out << format_double(lod);
  }
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      switch (m.status(i, j)) {
        case EntryStatus::Observed: out << format_double(m.value(i, j)); break;
        case EntryStatus::BelowLod: out << "<LOD"; break;
        case EntryStatus::Missing: out << "NA"; break;
      }
    }
    out << '\n';
  }
  finish(out, path);
}

std::filesystem::path status_path_for(const std::filesystem::path& values_path) {
  auto p = values_path;
  return p.replace_extension(".status.csv");
}

std::filesystem::path delta_path_for(const std::filesystem::path& values_path) {
  auto p = values_path;
  return p.replace_extension(".delta.csv");
}

MaskedMatrix standardize_columns(const MaskedMatrix& x) {
  const Index n = x.rows(), p = x.cols();
  Vector factor(p);
  for (Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
      if (x.status(i, j) != EntryStatus::Observed) continue;
      sum += x.value(i, j);
      ++count;
    }
    if (count < 2)
      throw DomainError("column '" + x.column_names()[j] + "' has fewer than 2 observed entries");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (x.status(i, j) != EntryStatus::Observed) continue;
      const double d = x.value(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(count - 1));
    if (!(sd > 0.0))
      throw DomainError("column '" + x.column_names()[j] + "' has zero variance");
    factor(j) = sd;
  }

  Matrix v = x.values();
  Matrix d = x.deltas();
  for (Index j = 0; j < p; ++j) {
    v.col(j) /= factor(j);
    d.col(j) /= factor(j);
  }
  MaskedMatrix out(std::move(v), x.statuses(), std::move(d), x.column_names());
  Vector total = factor;
  if (x.scale()) total = total.cwiseProduct(*x.scale());
  out.set_scale(std::move(total));
  return out;
}

std::vector<std::string> default_column_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace pcplod
