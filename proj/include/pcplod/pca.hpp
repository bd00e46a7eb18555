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

#include "pcplod/data_model.hpp"

namespace pcplod {

struct PcaModel {
  Vector means;                ///< p column means
  Matrix rotation;             ///< p x m right singular vectors, m = min(n, p)
  Matrix scores;               ///< n x m, centered data times rotation
  Vector singular_values;      ///< m, non-increasing
  Vector explained_share;      ///< sigma_i^2 / sum sigma_j^2
  Index k_selected = 0;
  double variance_threshold = 0.8;

  Index components() const { return rotation.cols(); }
};

/// Observed values, delta/sqrt(2) at BelowLod, column mean of the available
/// (Observed and imputed) entries at Missing.
Matrix impute_lod(const MaskedMatrix& x);

/// Centers columns, takes the SVD and keeps the smallest k whose cumulative
/// variance share reaches `variance_threshold`.
PcaModel fit_pca(const Matrix& m, double variance_threshold = 0.8);

/// First k scores times first k rotation columns, with the means added back.
Matrix reconstruct(const PcaModel& model, Index k);

}  // namespace pcplod
