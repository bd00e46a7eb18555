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

#include "json.hpp"
#include "pcplod/pca.hpp"
#include "pcplod/patterns.hpp"
#include "pcplod/rank_selection.hpp"
#include "pcplod/simulation.hpp"
#include "pcplod/solver.hpp"

namespace pcplod {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolkitVersion = "1.0.0";
inline constexpr const char* kManifestName = "manifest.json";
/// Observation matrix inside a dataset directory (two-file form).
inline constexpr const char* kDataName = "X.csv";

/// Writes `<dir>/manifest.json`: the given body plus the toolkit version.
/// Keys are written in insertion order so identical runs give identical text.
void write_manifest(const std::filesystem::path& dir, Json body);
Json read_manifest(const std::filesystem::path& dir);

Json to_json(const SimScenario& s);
SimScenario scenario_from_json(const Json& j);
Json to_json(const PcpConfig& c);
Json to_json(const CvConfig& c);

/// `p16_low_q25`: mixture size, noise structure and LOD percentage.
std::string scenario_label(const SimScenario& s);

/// Replicate directory name: `rep001`, `rep002`, ...
std::string replicate_dir_name(int replicate);

/// Seed of one replicate of a scenario cell.
std::uint64_t replicate_seed(std::uint64_t cell_seed, int replicate);

/// X.csv (+ status/delta), clean, noisy, loadings, scores and sparse_truth.
void write_dataset(const SimDataset& d, const std::filesystem::path& dir);

/// Simulation truth read back from a dataset directory.
struct TruthData {
  MaskedMatrix censored;
  Matrix clean;
  Matrix sparse_truth;
  Index r_true = 0;
  std::string scenario;
  int replicate = 0;
};
TruthData read_dataset(const std::filesystem::path& dir);

/// Loads an input given on the command line: a dataset directory, a matrix
/// CSV in either form, or a directory holding only `X.csv`.
MaskedMatrix read_input(const std::filesystem::path& path, const MatrixSchema& schema = {});

/// Directories below `root` (root included) that contain `marker`, sorted.
std::vector<std::filesystem::path> find_dirs_with(const std::filesystem::path& root,
                                                  const std::string& marker);

/// L.csv, S.csv and diagnostics.csv (iteration, objective, primal_residual).
void write_decomposition(const Decomposition& d, const std::vector<std::string>& names,
                         const std::filesystem::path& dir);

/// means, rotation, scores, singular_values (with shares) and prediction.csv
/// (the rank-k_selected reconstruction).
void write_pca(const PcaModel& model, const std::vector<std::string>& names,
               const std::filesystem::path& dir);

/// loadings.csv (p x k), scores.csv (n x k), singular_values.csv with shares.
void write_patterns(const PatternModel& m, const std::vector<std::string>& names,
                    const std::filesystem::path& dir);
PatternModel read_patterns(const std::filesystem::path& dir,
                           std::vector<std::string>* names = nullptr);

/// sparse_events.csv: n x p matrix of tokens H, L or 0, plus per-row counts.
void write_sparse_events(const SparseEventTable& t, const std::vector<std::string>& names,
                         const std::filesystem::path& path);
SparseEventTable read_sparse_events(const std::filesystem::path& path,
                                    std::vector<std::string>* names = nullptr);

/// Participant counts by number of Low (rows) and High (columns) events,
/// with row sums in a trailing `+` column and column sums in a `+` row.
void write_event_histogram(const SparsityStats& s, const std::filesystem::path& path);

}  // namespace pcplod
