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


#include "pcplod/rank_selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "pcplod/error.hpp"
#include "pcplod/parallel.hpp"

namespace pcplod {

void CvConfig::validate(Index n, Index p) const {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout fraction must lie in (0, 1)");
  if (rank_grid.empty()) throw ConfigError("rank grid is empty");
  for (Index r : rank_grid)
    if (r < 1 || r > std::min(n, p))
      throw ConfigError("rank " + std::to_string(r) + " in grid exceeds min(n, p)");
  if (repeats < 1) throw ConfigError("repeats must be positive");
}

std::vector<EntryIndex> holdout_mask(const MaskedMatrix& x, double fraction, Rng& rng) {
  std::vector<EntryIndex> eligible;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      if (x.status(i, j) == EntryStatus::Observed) eligible.emplace_back(i, j);
  if (eligible.size() < 10)
    throw DomainError("hold-out needs at least 10 observed entries, found " +
                      std::to_string(eligible.size()));
  const auto k = static_cast<std::uint64_t>(
      std::llround(fraction * static_cast<double>(eligible.size())));
  if (k == 0) throw DomainError("hold-out set is empty");
  auto picks = rng.sample_without_replacement(eligible.size(), k);
  std::sort(picks.begin(), picks.end());
  std::vector<EntryIndex> mask;
  mask.reserve(picks.size());
  for (auto idx : picks) mask.push_back(eligible[idx]);
  return mask;
}

std::uint64_t repeat_seed(std::uint64_t master_seed, int repeat) {
  return splitmix64(master_seed ^ splitmix64(0xC0FFEEULL + static_cast<std::uint64_t>(repeat)));
}

CvReport cv_select_rank(const MaskedMatrix& x, const PcpConfig& base, const CvConfig& cv) {
  cv.validate(x.rows(), x.cols());
  const auto grid_size = static_cast<int>(cv.rank_grid.size());

  std::vector<std::vector<EntryIndex>> masks(static_cast<std::size_t>(cv.repeats));
  for (int r = 0; r < cv.repeats; ++r) {
    Rng rng(repeat_seed(cv.seed, r));
    masks[static_cast<std::size_t>(r)] = holdout_mask(x, cv.holdout_fraction, rng);
  }

  CvReport report;
  report.rank_grid = cv.rank_grid;
  report.seed = cv.seed;
  report.errors.assign(static_cast<std::size_t>(grid_size),
                       std::vector<double>(static_cast<std::size_t>(cv.repeats), 0.0));

  parallel_for(grid_size * cv.repeats, cv.jobs, [&](int task) {
    const int g = task / cv.repeats;
    const int r = task % cv.repeats;
    const Index rank = cv.rank_grid[static_cast<std::size_t>(g)];
    const auto& mask = masks[static_cast<std::size_t>(r)];
    PcpConfig cfg = base;
    cfg.rank = rank;
    Decomposition d;
    try {
      d = solve(x.with_missing(mask), cfg);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " [cv rank " + std::to_string(rank) + ", repeat " +
                      std::to_string(r) + "]",
                  e.exit_code());
    }
    double num = 0.0, den = 0.0;
    for (auto [i, j] : mask) {
      const double truth = x.value(i, j);
      const double diff = truth - d.low_rank(i, j) - d.sparse(i, j);
      num += diff * diff;
      den += truth * truth;
    }
    report.errors[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)] =
        den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  });

  report.mean_error.resize(static_cast<std::size_t>(grid_size));
  report.sd_error.resize(static_cast<std::size_t>(grid_size));
  std::size_t best = 0;
  for (std::size_t g = 0; g < report.errors.size(); ++g) {
    const auto& e = report.errors[g];
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= static_cast<double>(e.size());
    double ss = 0.0;
    for (double v : e) ss += (v - mean) * (v - mean);
    report.mean_error[g] = mean;
    report.sd_error[g] = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
    const bool better = mean < report.mean_error[best] ||
                        (mean == report.mean_error[best] &&
                         report.rank_grid[g] < report.rank_grid[best]);
    if (g == 0 || better) best = g;
  }
  report.selected_rank = report.rank_grid[best];
  return report;
}

void write_cv_report(const CvReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "cv_errors.csv");
    if (!out) throw IoError("cannot write " + (dir / "cv_errors.csv").string());
    out << "rank,repeat,error\n";
    for (std::size_t g = 0; g < report.rank_grid.size(); ++g)
      for (std::size_t r = 0; r < report.errors[g].size(); ++r)
        out << report.rank_grid[g] << ',' << r << ',' << format_double(report.errors[g][r])
            << '\n';
  }
  std::ofstream out(dir / "cv_summary.csv");
  if (!out) throw IoError("cannot write " + (dir / "cv_summary.csv").string());
  out << "rank,mean_error,sd_error\n";
  for (std::size_t g = 0; g < report.rank_grid.size(); ++g)
    out << report.rank_grid[g] << ',' << format_double(report.mean_error[g]) << ','
        << format_double(report.sd_error[g]) << '\n';
}

}  // namespace pcplod
