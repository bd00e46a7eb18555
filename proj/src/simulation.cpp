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


#include "pcplod/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcplod/error.hpp"

namespace pcplod {

namespace {

// Stream ids for the independent parts of a dataset.
constexpr std::uint64_t kLoadingsStream = 1;
constexpr std::uint64_t kScoresStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kSpikeStream = 4;

}  // namespace

std::string to_string(NoiseStructure noise) {
  switch (noise) {
    case NoiseStructure::LowGaussian: return "low";
    case NoiseStructure::HighGaussian: return "high";
    case NoiseStructure::LowPlusSparse: return "sparse";
  }
  return "?";
}

NoiseStructure parse_noise(const std::string& name) {
  if (name == "low") return NoiseStructure::LowGaussian;
  if (name == "high") return NoiseStructure::HighGaussian;
  if (name == "sparse") return NoiseStructure::LowPlusSparse;
  throw ConfigError("unknown noise structure '" + name + "' (expected low, high or sparse)");
}

void SimScenario::validate() const {
  if (n < 2) throw ConfigError("n must be at least 2");
  if (p < 8 || p % 8 != 0) throw ConfigError("p must be a positive multiple of 8, got " +
                                             std::to_string(p));
  if (r_true != 4) throw ConfigError("the pattern layout is defined for r_true = 4 only");
  if (!(lod_quantile >= 0.0 && lod_quantile < 1.0))
    throw ConfigError("lod_quantile must lie in [0, 1)");
  if (!(sparse_prob >= 0.0 && sparse_prob <= 1.0))
    throw ConfigError("sparse_prob must lie in [0, 1]");
  if (!(sparse_min >= 0.0 && sparse_max >= sparse_min))
    throw ConfigError("sparse magnitude range must satisfy 0 <= min <= max");
}

Matrix gen_loadings(Index p, Index r_true, Rng& rng) {
  if (p < 8 || p % 8 != 0) throw ConfigError("p must be a positive multiple of 8");
  if (r_true != 4) throw ConfigError("the pattern layout is defined for r_true = 4 only");
  const Index block = p / 8;
  Matrix loadings = Matrix::Zero(r_true, p);
  Index col = 0;
  for (Index k = 0; k < r_true; ++k) {
    for (Index c = 0; c < block; ++c) loadings(k, col++) = 1.0;
    const Index next = (k + 1) % r_true;
    for (Index c = 0; c < block; ++c) {
      const double u = rng.uniform();
      loadings(k, col) = u;
      loadings(next, col) = 1.0 - u;
      ++col;
    }
  }
  return loadings;
}

MaskedMatrix censor_columns(const Matrix& noisy, double lod_quantile) {
  const Index n = noisy.rows(), p = noisy.cols();
  const auto k = static_cast<Index>(std::llround(lod_quantile * static_cast<double>(n)));
  StatusGrid status(n, p);
  Matrix delta = Matrix::Zero(n, p);
  if (k == 0) return MaskedMatrix(noisy, std::move(status), std::move(delta));
  if (k >= n) throw ConfigError("lod_quantile censors every entry of a column");

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < p; ++j) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return noisy(a, j) < noisy(b, j); });
    double lod = noisy(order[static_cast<std::size_t>(k)], j);
    if (!(lod > 0.0)) {
      // More than k zeros: the LOD becomes the smallest positive value.
      lod = 0.0;
      for (Index i : order) {
        if (noisy(i, j) > 0.0) {
          lod = noisy(i, j);
          break;
        }
      }
      if (!(lod > 0.0)) throw DomainError("column " + std::to_string(j) + " is all zero");
    }
    for (Index r = 0; r < k; ++r) {
      const Index i = order[static_cast<std::size_t>(r)];
      status(i, j) = EntryStatus::BelowLod;
    }
    delta.col(j).setConstant(lod);
  }
  return MaskedMatrix(noisy, std::move(status), std::move(delta));
}

SimDataset gen_dataset(const SimScenario& s) {
  s.validate();
  Rng loading_rng = Rng::stream(s.seed, kLoadingsStream);
  Rng score_rng = Rng::stream(s.seed, kScoresStream);
  Rng noise_rng = Rng::stream(s.seed, kNoiseStream);
  Rng spike_rng = Rng::stream(s.seed, kSpikeStream);

  Matrix loadings = gen_loadings(s.p, s.r_true, loading_rng);
  Matrix scores(s.n, s.r_true);
  for (Index i = 0; i < s.n; ++i)
    for (Index k = 0; k < s.r_true; ++k) scores(i, k) = score_rng.lognormal(1.0, 1.0);
  Matrix clean = scores * loadings;

  const double sd = s.noise_sd();
  Matrix spikes = Matrix::Zero(s.n, s.p);
  Matrix noisy(s.n, s.p);
  // Row-major draw order so that the stream layout does not depend on storage.
  for (Index i = 0; i < s.n; ++i) {
    for (Index j = 0; j < s.p; ++j) {
      double v = clean(i, j) + noise_rng.normal(0.0, sd);
      if (s.noise == NoiseStructure::LowPlusSparse && spike_rng.bernoulli(s.sparse_prob)) {
        spikes(i, j) = spike_rng.uniform(s.sparse_min, s.sparse_max);
        v += spikes(i, j);
      }
      noisy(i, j) = std::max(v, 0.0);
    }
  }

  MaskedMatrix censored = censor_columns(noisy, s.lod_quantile);
  return SimDataset{s,
                    std::move(loadings),
                    std::move(scores),
                    std::move(clean),
                    std::move(noisy),
                    std::move(spikes),
                    std::move(censored)};
}

MaskedMatrix gen_application_like(Index n, std::uint64_t seed) {
  constexpr Index p = 21;
  // 14 PCBs ordered by chlorination, then 4 furans and 3 dioxins.
  std::vector<std::string> names = {
      "PCB074", "PCB099", "PCB105", "PCB118", "PCB138", "PCB146", "PCB153",
      "PCB156", "PCB157", "PCB167", "PCB170", "PCB178", "PCB180", "PCB187",
      "F03",    "F04",    "F05",    "F08",    "D03",    "D05",    "D07"};
  // Fraction of each chemical that falls below its LOD.
  const std::vector<double> below = {0.05, 0.10, 0.30, 0.05, 0.02, 0.25, 0.02,
                                     0.20, 0.45, 0.35, 0.15, 0.30, 0.05, 0.20,
                                     0.40, 0.30, 0.45, 0.40, 0.35, 0.25, 0.30};

  Rng rng = Rng::stream(seed, 11);
  Matrix loadings = Matrix::Zero(3, p);
  for (Index j = 0; j < p; ++j) loadings(0, j) = rng.uniform(0.6, 1.0);
  for (Index j = 14; j < p; ++j) loadings(1, j) = rng.uniform(0.5, 0.9);
  for (Index j = 7; j < 14; ++j) loadings(2, j) = rng.uniform(0.4, 0.8);

  Matrix scores(n, 3);
  for (Index i = 0; i < n; ++i) {
    scores(i, 0) = rng.lognormal(1.0, 0.6);
    scores(i, 1) = rng.lognormal(0.0, 0.8);
    scores(i, 2) = rng.lognormal(0.0, 0.8);
  }
  Matrix clean = scores * loadings;

  Matrix values(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      double v = clean(i, j) * std::exp(rng.normal(0.0, 0.15));
      if (rng.bernoulli(0.03)) v *= rng.uniform(2.0, 4.0);
      values(i, j) = v;
    }
  }

  StatusGrid status(n, p);
  Matrix delta = Matrix::Zero(n, p);
  for (Index j = 0; j < p; ++j) {
    std::vector<double> col(values.col(j).data(), values.col(j).data() + n);
    std::sort(col.begin(), col.end());
    const auto k = static_cast<std::size_t>(std::llround(below[static_cast<std::size_t>(j)] *
                                                         static_cast<double>(n)));
    const double lod = col[std::min(k, col.size() - 1)];
    delta.col(j).setConstant(lod);
    for (Index i = 0; i < n; ++i)
      if (values(i, j) < lod) status(i, j) = EntryStatus::BelowLod;
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      if (rng.bernoulli(0.005)) status(i, j) = EntryStatus::Missing;

  return MaskedMatrix(std::move(values), std::move(status), std::move(delta), std::move(names));
}

std::vector<SimScenario> full_grid(std::uint64_t base_seed) {
  std::vector<SimScenario> grid;
  std::uint64_t cell = 0;
  for (Index p : {Index{16}, Index{48}}) {
    for (auto noise : {NoiseStructure::LowGaussian, NoiseStructure::HighGaussian,
                       NoiseStructure::LowPlusSparse}) {
      for (double q : {0.25, 0.50, 0.75}) {
        SimScenario s;
        s.p = p;
        s.noise = noise;
        s.lod_quantile = q;
        s.seed = splitmix64(base_seed + 1000003ULL * ++cell);
        grid.push_back(s);
      }
    }
  }
  return grid;
}

}  // namespace pcplod
