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


#include "pcplod/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "pcplod/error.hpp"
#include "pcplod/patterns.hpp"
#include "pcplod/proximal.hpp"

namespace pcplod {

std::vector<EntryIndex> entries_with(const MaskedMatrix& x, EntryStatus status) {
  std::vector<EntryIndex> out;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (x.status(i, j) == status) out.emplace_back(i, j);
  return out;
}

std::vector<MetricRow> evaluate_prediction(const Matrix& clean, const MaskedMatrix& censored,
                                           const Matrix& prediction, Index r_true,
                                           const std::string& scenario,
                                           const std::string& method, int replicate) {
  if (clean.rows() != prediction.rows() || clean.cols() != prediction.cols() ||
      clean.rows() != censored.rows() || clean.cols() != censored.cols())
    throw SchemaError("evaluate: prediction is " + std::to_string(prediction.rows()) + "x" +
                      std::to_string(prediction.cols()) + " but truth is " +
                      std::to_string(clean.rows()) + "x" + std::to_string(clean.cols()));
  std::vector<MetricRow> rows;
  auto add = [&](const std::string& stratum, const std::string& metric, double v) {
    rows.push_back({scenario, method, stratum, replicate, metric, v});
  };
  add("overall", "relative_error", relative_error(clean, prediction));
  const auto above = entries_with(censored, EntryStatus::Observed);
  const auto below = entries_with(censored, EntryStatus::BelowLod);
  if (!above.empty()) add("above_lod", "relative_error", relative_error(clean, prediction, &above));
  if (!below.empty()) add("below_lod", "relative_error", relative_error(clean, prediction, &below));

  const Index k = std::min({r_true, effective_rank(prediction), effective_rank(clean)});
  if (k >= 1) {
    const auto left = eigenvector_error(clean, prediction, k, VectorSide::Left);
    const auto right = eigenvector_error(clean, prediction, k, VectorSide::Right);
    add("overall", "left_vector_error", left.sign_aligned);
    add("overall", "right_vector_error", right.sign_aligned);
    add("overall", "left_vector_error_procrustes", left.procrustes);
    add("overall", "right_vector_error_procrustes", right.procrustes);
  }
  add("overall", "rank", static_cast<double>(effective_rank(prediction)));
  return rows;
}

std::vector<MetricRow> evaluate_sparse(const Matrix& sparse, const Matrix& low_rank,
                                       const MaskedMatrix& censored, const Matrix& planted,
                                       const std::string& scenario, const std::string& method,
                                       int replicate) {
  const auto table = classify_sparse(sparse, censored, low_rank);
  const bool has_spikes = (planted.array() != 0.0).any();
  const auto stats = sparsity_stats(table, has_spikes ? &planted : nullptr);
  std::vector<MetricRow> rows;
  rows.push_back({scenario, method, "overall", replicate, "non_null_fraction",
                  stats.non_null_fraction});
  if (stats.capture_rate)
    rows.push_back({scenario, method, "overall", replicate, "capture_rate", *stats.capture_rate});
  return rows;
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scenario,method,stratum,replicate,metric,value\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.method << ',' << r.stratum << ',' << r.replicate << ','
        << r.metric << ',' << format_double(r.value) << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "scenario,method,stratum,replicate,metric,value")
    throw SchemaError(path.string() + ": unexpected metrics header '" + line + "'");
  std::vector<MetricRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6)
      throw SchemaError(path.string() + ": expected 6 cells at line " + std::to_string(lineno));
    MetricRow r{cells[0], cells[1], cells[2], 0, cells[4], 0.0};
    try {
      std::size_t used = 0;
      r.replicate = std::stoi(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": bad replicate '" + cells[3] + "'", lineno, 4);
    }
    if (cells[5] == "NA") {
      r.value = std::numeric_limits<double>::quiet_NaN();
    } else {
      try {
        std::size_t used = 0;
        r.value = std::stod(cells[5], &used);
        if (used != cells[5].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad value '" + cells[5] + "'", lineno, 6);
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pcplod
