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
#include <vector>

#include "pcplod/data_model.hpp"
#include "pcplod/rng.hpp"
#include "pcplod/solver.hpp"

namespace pcplod {

struct CvConfig {
  std::vector<Index> rank_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double holdout_fraction = 0.20;
  int repeats = 100;
  std::uint64_t seed = 1;
  /// Worker threads; results do not depend on this.
  int jobs = 1;

  void validate(Index n, Index p) const;
};

struct CvReport {
  std::vector<Index> rank_grid;
  /// errors[g][r]: held-out relative error for rank_grid[g], repeat r.
  std::vector<std::vector<double>> errors;
  std::vector<double> mean_error;
  std::vector<double> sd_error;
  Index selected_rank = 0;
  std::uint64_t seed = 0;
};

/// Uniformly random subset of the Observed entries, of size
/// round(fraction * #Observed), in row-major order.
std::vector<EntryIndex> holdout_mask(const MaskedMatrix& x, double fraction, Rng& rng);

/// Seed of the hold-out mask for one repeat. The same mask is used for every
/// rank in the grid.
std::uint64_t repeat_seed(std::uint64_t master_seed, int repeat);

/// Random hold-out cross-validation of the rank bound. For every rank and
/// repeat, hides a fresh hold-out set, solves, and scores
/// ||X_h - (L + S)_h||_F / ||X_h||_F on the hidden entries. The selected rank
/// has the lowest mean error; ties go to the smaller rank.
CvReport cv_select_rank(const MaskedMatrix& x, const PcpConfig& base, const CvConfig& cv);

/// `<dir>/cv_errors.csv` (rank, repeat, error) and `<dir>/cv_summary.csv`
/// (rank, mean_error, sd_error).
void write_cv_report(const CvReport& report, const std::filesystem::path& dir);

}  // namespace pcplod
