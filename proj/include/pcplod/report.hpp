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
#include <optional>
#include <string>
#include <vector>

#include "pcplod/evaluation.hpp"
#include "pcplod/patterns.hpp"

namespace pcplod {

/// Linear-interpolation sample quantile (R type 7): h = (N - 1) * prob,
/// x[floor h] + (h - floor h) * (x[floor h + 1] - x[floor h]) on sorted data.
double quantile_type7(std::vector<double> values, double prob);

/// Fields of a `p16_low_q25` label.
struct ScenarioKey {
  Index p = 0;
  std::string noise;
  int lod_percent = 0;
};
std::optional<ScenarioKey> parse_scenario_label(const std::string& label);

struct SummaryRow {
  std::string scenario;
  std::string method;
  std::string stratum;
  std::string metric;
  std::size_t count = 0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

/// Quartiles per (scenario, method, stratum, metric), sorted by key. NaN
/// values are dropped.
std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

/// Wide quartile table for one metric and stratum, pooled over p:
/// one row per noise structure and method, a quartile triple per LOD level.
/// Returns false (and writes nothing) when no row matches.
bool write_lod_table(const std::vector<MetricRow>& rows, const std::string& metric,
                     const std::string& stratum, const std::filesystem::path& path);

/// Box plots of one metric and stratum: a panel per (p, noise), a group per
/// LOD level, a box per method. Whiskers reach the most extreme point within
/// 1.5 IQR; points beyond are drawn individually.
bool write_box_plot_svg(const std::vector<MetricRow>& rows, const std::string& metric,
                        const std::string& stratum, const std::string& title,
                        const std::filesystem::path& path);

/// Bar chart of pattern loadings, one panel per pattern.
void write_loadings_svg(const PatternModel& m, const std::vector<std::string>& names,
                        const std::filesystem::path& path);

/// Participants with at least one event (rows, most events first) by
/// chemical (columns); High and Low cells coloured.
void write_sparse_heatmap_svg(const SparseEventTable& t, const std::vector<std::string>& names,
                              const std::filesystem::path& path);

}  // namespace pcplod
