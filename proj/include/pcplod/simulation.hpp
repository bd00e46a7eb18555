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
#include <string>
#include <vector>

#include "pcplod/data_model.hpp"
#include "pcplod/rng.hpp"

namespace pcplod {

enum class NoiseStructure { LowGaussian, HighGaussian, LowPlusSparse };

/// "low", "high", "sparse".
std::string to_string(NoiseStructure noise);
NoiseStructure parse_noise(const std::string& name);

struct SimScenario {
  Index n = 500;
  Index p = 16;
  Index r_true = 4;
  NoiseStructure noise = NoiseStructure::LowGaussian;
  double lod_quantile = 0.25;
  double sparse_prob = 0.05;
  double sparse_min = 5.0;
  double sparse_max = 15.0;
  std::uint64_t seed = 1;

  double noise_sd() const { return noise == NoiseStructure::HighGaussian ? 5.0 : 1.0; }
  void validate() const;
};

struct SimDataset {
  SimScenario scenario;
  Matrix loadings;      ///< r_true x p
  Matrix scores;        ///< n x r_true
  Matrix clean;         ///< scores * loadings
  Matrix noisy;         ///< max(clean + noise [+ spikes], 0)
  Matrix sparse_truth;  ///< injected spike magnitudes, zero elsewhere
  MaskedMatrix censored;
};

/// Pattern loadings: each pattern has p/8 chemicals loading 1 on it alone,
/// and each cyclic pair of patterns (k, k+1 mod 4) shares p/8 chemicals whose
/// two loadings are (u, 1 - u), u ~ Uniform(0, 1). Columns are laid out as
/// [distinct(1), shared(1,2), distinct(2), shared(2,3), ...].
Matrix gen_loadings(Index p, Index r_true, Rng& rng);

SimDataset gen_dataset(const SimScenario& scenario);

/// Per-column censoring: with k = round(q * n), the LOD of a column is its
/// k-th smallest value (0-based) and entries strictly below it become BelowLod.
MaskedMatrix censor_columns(const Matrix& noisy, double lod_quantile);

/// Synthetic stand-in for a persistent-organic-pollutant panel: n x 21 with a
/// rank-3 non-negative structure (overall exposure, dioxin/furan group,
/// higher-chlorinated PCB group), lognormal measurement error, occasional
/// extreme events, chemical-specific LODs and a few missing entries.
MaskedMatrix gen_application_like(Index n, std::uint64_t seed);

/// The 2 x 3 x 3 grid of p, noise structure and LOD quantile.
std::vector<SimScenario> full_grid(std::uint64_t base_seed);

}  // namespace pcplod
