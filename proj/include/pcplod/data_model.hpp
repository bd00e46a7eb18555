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


#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pcplod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class EntryStatus : std::uint8_t { Observed = 0, BelowLod = 1, Missing = 2 };

/// One-letter token used in `*.status.csv` files: O, L or M.
char status_token(EntryStatus s);
EntryStatus parse_status_token(std::string_view token);

/// Column-major n x p grid of entry statuses.
class StatusGrid {
 public:
  StatusGrid() = default;
  StatusGrid(Index rows, Index cols, EntryStatus fill = EntryStatus::Observed)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows * cols), fill) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  EntryStatus operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(j * rows_ + i)];
  }
  EntryStatus& operator()(Index i, Index j) {
    return data_[static_cast<std::size_t>(j * rows_ + i)];
  }

  Index count(EntryStatus s) const;

  friend bool operator==(const StatusGrid&, const StatusGrid&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<EntryStatus> data_;
};

/// (row, column) position of a matrix entry.
using EntryIndex = std::pair<Index, Index>;

/// Observation matrix with per-entry detection status and LOD values.
///
/// Values at BelowLod and Missing positions are replaced by NaN on
/// construction; they are never part of the data and every numeric routine
/// consults status() before reading value().
class MaskedMatrix {
 public:
  MaskedMatrix(Matrix values, StatusGrid status, Matrix delta,
               std::vector<std::string> column_names = {});

  /// All entries Observed, delta zero.
  static MaskedMatrix observed(const Matrix& values,
                               std::vector<std::string> column_names = {});

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

  EntryStatus status(Index i, Index j) const { return status_(i, j); }
  double value(Index i, Index j) const { return values_(i, j); }
  double delta(Index i, Index j) const { return delta_(i, j); }

  const Matrix& values() const { return values_; }
  const Matrix& deltas() const { return delta_; }
  const StatusGrid& statuses() const { return status_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::optional<Vector>& scale() const { return scale_; }
  void set_scale(Vector scale) { scale_ = std::move(scale); }

  Index count(EntryStatus s) const { return status_.count(s); }
  bool all_observed() const { return count(EntryStatus::Observed) == rows() * cols(); }

  /// Copy with the given entries re-marked Missing.
  MaskedMatrix with_missing(const std::vector<EntryIndex>& entries) const;

  /// Observed values, delta/2 at BelowLod, 0 at Missing.
  Matrix warm_start() const;

 private:
  Matrix values_;
  StatusGrid status_;
  Matrix delta_;
  std::vector<std::string> names_;
  std::optional<Vector> scale_;
};

/// How a matrix CSV is to be interpreted.
struct MatrixSchema {
  /// When non-empty the header must match exactly.
  std::vector<std::string> expected_columns;
  /// Fail unless a `#lod` metadata row is present.
  bool require_lod_row = false;
  /// Empty cells in a column with an LOD become BelowLod instead of Missing.
  bool empty_is_below_lod = false;
};

/// Reads a matrix CSV.
///
/// Single-file form: header of column names, an optional metadata row whose
/// first cell is `#lod` followed by one LOD per column, then one row per
/// observation. Cells may hold a number, `<LOD`, `NA`, or nothing.
///
/// Two-file form: when `<stem>.status.csv` (tokens O/L/M) and
/// `<stem>.delta.csv` exist next to `path`, statuses and LODs come from them.
MaskedMatrix read_matrix_csv(const std::filesystem::path& path,
                             const MatrixSchema& schema = {});

/// Plain numeric matrix with a header row. Every cell must parse.
Matrix read_numeric_csv(const std::filesystem::path& path,
                        std::vector<std::string>* column_names = nullptr);

/// Writes a header row and full-precision values (17 significant digits).
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const std::vector<std::string>& column_names = {});

/// Two-file form: values (NA where not Observed) plus status and delta files.
void write_masked_csv(const MaskedMatrix& m, const std::filesystem::path& path);

/// Single-file form with a `#lod` row. Every BelowLod entry of a column must
/// share one LOD; Missing entries are written as `NA`.
void write_lod_csv(const MaskedMatrix& m, const std::filesystem::path& path);

/// `<stem>.status.csv` / `<stem>.delta.csv` companions of a values path.
std::filesystem::path status_path_for(const std::filesystem::path& values_path);
std::filesystem::path delta_path_for(const std::filesystem::path& values_path);

/// Shortest text with 17 significant digits; zero is written as `0`.
std::string format_double(double x);

/// Divides each column (values and deltas) by the sample standard deviation
/// of its Observed entries. Means are not removed.
MaskedMatrix standardize_columns(const MaskedMatrix& x);

/// Default column labels x1..xp.
std::vector<std::string> default_column_names(Index p);

}  // namespace pcplod
