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


#include "pcplod/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcplod/error.hpp"
#include "pcplod/rng.hpp"

namespace fs = std::filesystem;

namespace pcplod {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void write_header(std::ofstream& out, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
}

std::vector<std::string> component_names(Index k, const char* prefix) {
  std::vector<std::string> out;
  for (Index c = 1; c <= k; ++c) out.push_back(prefix + std::to_string(c));
  return out;
}

void write_spectrum(const Vector& sigma, const Vector& share, const fs::path& path) {
  auto out = open_out(path);
  out << "component,singular_value,explained_share\n";
  for (Index c = 0; c < sigma.size(); ++c)
    out << c + 1 << ',' << format_double(sigma(c)) << ',' << format_double(share(c)) << '\n';
  close_out(out, path);
}

// Loadings and other p-indexed tables carry the chemical name as first column.
void write_named_rows(const Matrix& m, const std::vector<std::string>& row_names,
                      const std::vector<std::string>& col_names, const fs::path& path) {
  auto out = open_out(path);
  out << "chemical";
  for (const auto& c : col_names) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << row_names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
  close_out(out, path);
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw SchemaError(path.string() + ": empty file");
  return rows;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(path.string() + ": malformed number '" + cell + "'", row, col);
}

}  // namespace

void write_manifest(const fs::path& dir, Json body) {
  body["toolkit_version"] = kToolkitVersion;
  const fs::path path = dir / kManifestName;
  auto out = open_out(path);
  out << body.dump(2) << '\n';
  close_out(out, path);
}

Json read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Json to_json(const SimScenario& s) {
  return Json{{"n", s.n},
              {"p", s.p},
              {"r_true", s.r_true},
              {"noise", to_string(s.noise)},
              {"lod_quantile", s.lod_quantile},
              {"sparse_prob", s.sparse_prob},
              {"sparse_min", s.sparse_min},
              {"sparse_max", s.sparse_max},
              {"seed", s.seed}};
}

SimScenario scenario_from_json(const Json& j) {
  try {
    SimScenario s;
    s.n = j.at("n").get<Index>();
    s.p = j.at("p").get<Index>();
    s.r_true = j.at("r_true").get<Index>();
    s.noise = parse_noise(j.at("noise").get<std::string>());
    s.lod_quantile = j.at("lod_quantile").get<double>();
    s.sparse_prob = j.at("sparse_prob").get<double>();
    s.sparse_min = j.at("sparse_min").get<double>();
    s.sparse_max = j.at("sparse_max").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("scenario manifest: ") + e.what());
  }
}

Json to_json(const PcpConfig& c) {
  Json j{{"rank", c.rank}};
  j["lambda"] = c.lambda ? Json(*c.lambda) : Json(nullptr);
  j["mu"] = c.mu ? Json(*c.mu) : Json(nullptr);
  j["rho"] = c.rho;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["final_polish_passes"] = c.final_polish_passes;
  j["max_polish_passes"] = c.max_polish_passes;
  j["residual_balancing"] = c.residual_balancing;
  j["data_fit"] = c.data_fit == DataFit::LodPenalty ? "lod" : "frobenius";
  return j;
}

Json to_json(const CvConfig& c) {
  return Json{{"rank_grid", c.rank_grid},
              {"holdout_fraction", c.holdout_fraction},
              {"repeats", c.repeats},
              {"seed", c.seed}};
}

std::string scenario_label(const SimScenario& s) {
  return "p" + std::to_string(s.p) + "_" + to_string(s.noise) + "_q" +
         std::to_string(std::lround(s.lod_quantile * 100.0));
}

std::string replicate_dir_name(int replicate) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "rep%03d", replicate);
  return buf;
}

std::uint64_t replicate_seed(std::uint64_t cell_seed, int replicate) {
  return splitmix64(cell_seed ^ splitmix64(0x5EEDULL + static_cast<std::uint64_t>(replicate)));
}

void write_dataset(const SimDataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& names = d.censored.column_names();
  write_masked_csv(d.censored, dir / kDataName);
  write_matrix_csv(d.clean, dir / "clean.csv", names);
  write_matrix_csv(d.noisy, dir / "noisy.csv", names);
  write_matrix_csv(d.sparse_truth, dir / "sparse_truth.csv", names);
  write_matrix_csv(d.loadings, dir / "loadings.csv", names);
  write_matrix_csv(d.scores, dir / "scores.csv", component_names(d.scores.cols(), "pattern"));
}

TruthData read_dataset(const fs::path& dir) {
  TruthData t{read_matrix_csv(dir / kDataName), {}, {}, 0, {}, 0};
  t.clean = read_numeric_csv(dir / "clean.csv");
  t.sparse_truth = read_numeric_csv(dir / "sparse_truth.csv");
  if (t.clean.rows() != t.censored.rows() || t.clean.cols() != t.censored.cols() ||
      t.sparse_truth.rows() != t.clean.rows() || t.sparse_truth.cols() != t.clean.cols())
    throw SchemaError(dir.string() + ": truth matrices disagree in shape");
  const Json m = read_manifest(dir);
  try {
    const SimScenario s = scenario_from_json(m.at("scenario"));
    t.r_true = s.r_true;
    t.scenario = scenario_label(s);
    t.replicate = m.at("replicate").get<int>();
  } catch (const Json::exception& e) {
    throw SchemaError(dir.string() + ": manifest lacks " + e.what());
  }
  return t;
}

MaskedMatrix read_input(const fs::path& path, const MatrixSchema& schema) {
  if (fs::is_directory(path)) {
    if (!fs::exists(path / kDataName))
      throw IoError(path.string() + ": directory has no " + kDataName);
    return read_matrix_csv(path / kDataName, schema);
  }
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  return read_matrix_csv(path, schema);
}

std::vector<fs::path> find_dirs_with(const fs::path& root, const std::string& marker) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  if (fs::exists(root / marker)) out.push_back(root);
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / marker)) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_decomposition(const Decomposition& d, const std::vector<std::string>& names,
                         const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix_csv(d.low_rank, dir / "L.csv", names);
  write_matrix_csv(d.sparse, dir / "S.csv", names);
  const fs::path path = dir / "diagnostics.csv";
  auto out = open_out(path);
  out << "iteration,objective,primal_residual\n";
  const auto& diag = d.diagnostics;
  for (std::size_t i = 0; i < diag.objective_trace.size(); ++i)
    out << i + 1 << ',' << format_double(diag.objective_trace[i]) << ','
        << format_double(diag.primal_residual_trace[i]) << '\n';
  close_out(out, path);
}

void write_pca(const PcaModel& model, const std::vector<std::string>& names, const fs::path& dir) {
  fs::create_directories(dir);
  const auto pcs = component_names(model.components(), "PC");
  {
    const fs::path path = dir / "means.csv";
    auto out = open_out(path);
    out << "chemical,mean\n";
    for (Index j = 0; j < model.means.size(); ++j)
      out << names[static_cast<std::size_t>(j)] << ',' << format_double(model.means(j)) << '\n';
    close_out(out, path);
  }
  write_named_rows(model.rotation, names, pcs, dir / "rotation.csv");
  write_matrix_csv(model.scores, dir / "scores.csv", pcs);
  write_spectrum(model.singular_values, model.explained_share, dir / "singular_values.csv");
  write_matrix_csv(reconstruct(model, model.k_selected), dir / "prediction.csv", names);
}

void write_patterns(const PatternModel& m, const std::vector<std::string>& names,
                    const fs::path& dir) {
  fs::create_directories(dir);
  const auto pats = component_names(m.singular_values.size(), "pattern");
  write_named_rows(m.right_vectors, names, pats, dir / "loadings.csv");
  write_matrix_csv(m.left_vectors, dir / "scores.csv", pats);
  write_spectrum(m.singular_values, m.explained_share, dir / "singular_values.csv");
}

PatternModel read_patterns(const fs::path& dir, std::vector<std::string>* names) {
  PatternModel m;
  const auto loadings = read_rows(dir / "loadings.csv");
  const auto k = static_cast<Index>(loadings[0].size()) - 1;
  const auto p = static_cast<Index>(loadings.size()) - 1;
  m.right_vectors.resize(p, k);
  if (names) names->clear();
  for (Index j = 0; j < p; ++j) {
    const auto& row = loadings[static_cast<std::size_t>(j + 1)];
    if (static_cast<Index>(row.size()) != k + 1)
      throw SchemaError((dir / "loadings.csv").string() + ": ragged row");
    if (names) names->push_back(row[0]);
    for (Index c = 0; c < k; ++c)
      m.right_vectors(j, c) = parse_cell(row[static_cast<std::size_t>(c + 1)],
                                         static_cast<std::size_t>(j + 2),
                                         static_cast<std::size_t>(c + 2), dir / "loadings.csv");
  }
  const auto spectrum = read_rows(dir / "singular_values.csv");
  m.singular_values.resize(k);
  m.explained_share.resize(k);
  for (Index c = 0; c < k; ++c) {
    const auto& row = spectrum.at(static_cast<std::size_t>(c + 1));
    m.singular_values(c) = parse_cell(row.at(1), static_cast<std::size_t>(c + 2), 2,
                                      dir / "singular_values.csv");
    m.explained_share(c) = parse_cell(row.at(2), static_cast<std::size_t>(c + 2), 3,
                                      dir / "singular_values.csv");
  }
  m.left_vectors = read_numeric_csv(dir / "scores.csv");
  return m;
}

void write_sparse_events(const SparseEventTable& t, const std::vector<std::string>& names,
                         const fs::path& path) {
  auto out = open_out(path);
  write_header(out, names);
  out << ",high_events,low_events\n";
  for (Index i = 0; i < t.rows; ++i) {
    for (Index j = 0; j < t.cols; ++j) {
      const SparseClass c = t.at(i, j);
      out << (c == SparseClass::High ? "H" : c == SparseClass::Low ? "L" : "0") << ',';
    }
    out << t.high_per_row[static_cast<std::size_t>(i)] << ','
        << t.low_per_row[static_cast<std::size_t>(i)] << '\n';
  }
  close_out(out, path);
}

SparseEventTable read_sparse_events(const fs::path& path, std::vector<std::string>* names) {
  const auto rows = read_rows(path);
  if (rows[0].size() < 3) throw SchemaError(path.string() + ": missing columns");
  SparseEventTable t;
  t.cols = static_cast<Index>(rows[0].size()) - 2;
  t.rows = static_cast<Index>(rows.size()) - 1;
  if (names) names->assign(rows[0].begin(), rows[0].end() - 2);
  t.classes.assign(static_cast<std::size_t>(t.rows * t.cols), SparseClass::Null);
  t.high_per_row.assign(static_cast<std::size_t>(t.rows), 0);
  t.low_per_row.assign(static_cast<std::size_t>(t.rows), 0);
  for (Index i = 0; i < t.rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    if (static_cast<Index>(row.size()) != t.cols + 2)
      throw SchemaError(path.string() + ": ragged row " + std::to_string(i + 2));
    for (Index j = 0; j < t.cols; ++j) {
      const auto& tok = row[static_cast<std::size_t>(j)];
      SparseClass c = SparseClass::Null;
      if (tok == "H") c = SparseClass::High;
      else if (tok == "L") c = SparseClass::Low;
      else if (tok != "0")
        throw ParseError(path.string() + ": unknown event token '" + tok + "'",
                         static_cast<std::size_t>(i + 2), static_cast<std::size_t>(j + 1));
      t.classes[static_cast<std::size_t>(j * t.rows + i)] = c;
      if (c == SparseClass::High) ++t.high_per_row[static_cast<std::size_t>(i)];
      if (c == SparseClass::Low) ++t.low_per_row[static_cast<std::size_t>(i)];
    }
  }
  return t;
}

void write_event_histogram(const SparsityStats& s, const fs::path& path) {
  auto out = open_out(path);
  const std::size_t highs = s.histogram.empty() ? 1 : s.histogram[0].size();
  out << "low_events";
  for (std::size_t h = 0; h < highs; ++h) out << ',' << h;
  out << ",+\n";
  std::vector<int> col_sums(highs, 0);
  int total = 0;
  for (std::size_t l = 0; l < s.histogram.size(); ++l) {
    out << l;
    int row_sum = 0;
    for (std::size_t h = 0; h < highs; ++h) {
      const int c = s.histogram[l][h];
      out << ',' << c;
      row_sum += c;
      col_sums[h] += c;
    }
    total += row_sum;
    out << ',' << row_sum << '\n';
  }
  out << '+';
  for (int c : col_sums) out << ',' << c;
  out << ',' << total << '\n';
  close_out(out, path);
}

}  // namespace pcplod
