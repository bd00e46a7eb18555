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

#include <optional>
#include <vector>

#include "pcplod/data_model.hpp"

namespace pcplod {

/// SVD of an estimated low-rank matrix, truncated at k components.
struct PatternModel {
  Matrix left_vectors;    ///< n x k (individual scores, unscaled)
  Vector singular_values; ///< k
  Matrix right_vectors;   ///< p x k (chemical loadings)
  Vector explained_share; ///< sigma_i^2 over the sum of all squared singular values
};

/// Top-k SVD of L without centering. Throws when k exceeds the effective rank.
PatternModel extract_patterns(const Matrix& low_rank, Index k);

enum class SparseClass : std::uint8_t { Null = 0, High = 1, Low = 2 };

struct SparseEventTable {
  /// n x p classification, column-major.
  std::vector<SparseClass> classes;
  Index rows = 0;
  Index cols = 0;
  /// Per chemical: 2 * sd of (X - L) over Observed entries; NaN if excluded.
  Vector threshold;
  /// Chemicals with fewer than two Observed entries; never classified.
  std::vector<Index> excluded_columns;
  std::vector<int> high_per_row;
  std::vector<int> low_per_row;

  SparseClass at(Index i, Index j) const {
    return classes[static_cast<std::size_t>(j * rows + i)];
  }
};

/// Per chemical, an entry of S is High above 2 * sqrt(Var(X - L)) and Low
/// below its negative, with the variance (population form) taken over the
/// chemical's Observed entries only.
SparseEventTable classify_sparse(const Matrix& sparse, const MaskedMatrix& x,
                                 const Matrix& low_rank);

/// ||truth - pred||_F / ||truth||_F, optionally restricted to `mask` entries.
double relative_error(const Matrix& truth, const Matrix& pred,
                      const std::vector<EntryIndex>* mask = nullptr);

enum class VectorSide { Left, Right };

struct EigenvectorError {
  /// Per-vector sign-aligned relative error.
  double sign_aligned = 0.0;
  /// Error after the best orthogonal alignment (Procrustes).
  double procrustes = 0.0;
  /// Set when either input has singular values within 1e-8 (relative) of each other.
  bool ambiguous = false;
};

/// Compares the top-k singular vectors of two matrices.
EigenvectorError eigenvector_error(const Matrix& truth, const Matrix& estimate, Index k,
                                   VectorSide side);

struct SparsityStats {
  double non_null_fraction = 0.0;
  /// histogram[low][high]: participants with `low` Low events and `high` High events.
  std::vector<std::vector<int>> histogram;
  /// |High ∩ planted| / |planted| when planted spikes are supplied.
  std::optional<double> capture_rate;
};

/// Fraction of flagged entries, per-participant event histogram, and the
/// capture rate of planted spikes (nonzero entries of `planted`).
SparsityStats sparsity_stats(const SparseEventTable& table,
                             const Matrix* planted = nullptr);

}  // namespace pcplod
