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


#include "pcplod/pca.hpp"

#include <cmath>
#include <string>

#include "pcplod/error.hpp"

namespace pcplod {

Matrix impute_lod(const MaskedMatrix& x) {
  const Index n = x.rows(), p = x.cols();
  Matrix out(n, p);
  for (Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
      switch (x.status(i, j)) {
        case EntryStatus::Observed: out(i, j) = x.value(i, j); break;
        case EntryStatus::BelowLod: out(i, j) = x.delta(i, j) / std::sqrt(2.0); break;
        case EntryStatus::Missing: continue;
      }
      sum += out(i, j);
      ++count;
    }
    const double fill = count > 0 ? sum / static_cast<double>(count) : 0.0;
    for (Index i = 0; i < n; ++i)
      if (x.status(i, j) == EntryStatus::Missing) out(i, j) = fill;
  }
  return out;
}

PcaModel fit_pca(const Matrix& m, double variance_threshold) {
  if (m.rows() < 2) throw DomainError("PCA needs at least two rows");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw ConfigError("variance threshold must lie in (0, 1]");
  if (!m.allFinite()) throw DomainError("PCA input has non-finite entries");

  PcaModel model;
  model.variance_threshold = variance_threshold;
  model.means = m.colwise().mean().transpose();
  const Matrix centered = m.rowwise() - model.means.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  model.singular_values = svd.singularValues();
  model.rotation = svd.matrixV();
  model.scores = centered * model.rotation;

  const Vector sq = model.singular_values.array().square();
  const double total = sq.sum();
  if (!(total > 0.0)) throw DomainError("PCA input has zero total variance");
  model.explained_share = sq / total;

  // Relative slack so that a threshold of exactly 1 is reachable despite rounding.
  const double target = variance_threshold * (1.0 - 1e-12);
  double cumulative = 0.0;
  model.k_selected = model.explained_share.size();
  for (Index k = 0; k < model.explained_share.size(); ++k) {
    cumulative += model.explained_share(k);
    if (cumulative >= target) {
      model.k_selected = k + 1;
      break;
    }
  }
  return model;
}

Matrix reconstruct(const PcaModel& model, Index k) {
  if (k < 1 || k > model.components())
    throw ConfigError("reconstruction rank " + std::to_string(k) + " outside [1, " +
                      std::to_string(model.components()) + "]");
  Matrix out = model.scores.leftCols(k) * model.rotation.leftCols(k).transpose();
  out.rowwise() += model.means.transpose();
  return out;
}

}  // namespace pcplod
