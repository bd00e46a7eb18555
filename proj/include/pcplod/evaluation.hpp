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

#include <filesystem>
#include <string>
#include <vector>

#include "pcplod/data_model.hpp"

namespace pcplod {

/// One tidy metrics record.
struct MetricRow {
  std::string scenario;
  std::string method;
  /// overall, above_lod or below_lod.
  std::string stratum;
  int replicate = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const MetricRow&) const = default;
};

/// Entries of a given status, in column-major order.
std::vector<EntryIndex> entries_with(const MaskedMatrix& x, EntryStatus status);

/// Relative error of `prediction` against the pre-noise truth overall and on
/// the Observed (above_lod) and BelowLod (below_lod) strata, plus left and
/// right singular-vector errors at k = min(r_true, rank of prediction).
std::vector<MetricRow> evaluate_prediction(const Matrix& clean, const MaskedMatrix& censored,
                                           const Matrix& prediction, Index r_true,
                                           const std::string& scenario,
                                           const std::string& method, int replicate);

/// Non-null fraction of the thresholded S and, when spikes were planted, the
/// fraction of them flagged High.
std::vector<MetricRow> evaluate_sparse(const Matrix& sparse, const Matrix& low_rank,
                                       const MaskedMatrix& censored, const Matrix& planted,
                                       const std::string& scenario, const std::string& method,
                                       int replicate);

/// Header: scenario,method,stratum,replicate,metric,value.
void write_metrics_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace pcplod
