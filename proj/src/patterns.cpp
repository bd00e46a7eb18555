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


#include "pcplod/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcplod/error.hpp"
#include "pcplod/proximal.hpp"

namespace pcplod {

PatternModel extract_patterns(const Matrix& low_rank, Index k) {
  const Index rank = effective_rank(low_rank);
  if (k < 1 || k > rank)
    throw ConfigError("cannot extract " + std::to_string(k) + " patterns from a matrix of rank " +
                      std::to_string(rank));
  Eigen::JacobiSVD<Matrix> svd(low_rank, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  PatternModel model;
  model.left_vectors = svd.matrixU().leftCols(k);
  model.right_vectors = svd.matrixV().leftCols(k);
  model.singular_values = s.head(k);
  model.explained_share = s.head(k).array().square() / s.array().square().sum();
  return model;
}

SparseEventTable classify_sparse(const Matrix& sparse, const MaskedMatrix& x,
                                 const Matrix& low_rank) {
  const Index n = x.rows(), p = x.cols();
  if (sparse.rows() != n || sparse.cols() != p || low_rank.rows() != n || low_rank.cols() != p)
    throw ConfigError("classify_sparse: shape mismatch");

  SparseEventTable table;
  table.rows = n;
  table.cols = p;
  table.classes.assign(static_cast<std::size_t>(n * p), SparseClass::Null);
  table.threshold = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
  table.high_per_row.assign(static_cast<std::size_t>(n), 0);
  table.low_per_row.assign(static_cast<std::size_t>(n), 0);

  for (Index j = 0; j < p; ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
      if (x.status(i, j) != EntryStatus::Observed) continue;
      sum += x.value(i, j) - low_rank(i, j);
      ++count;
    }
    if (count < 2) {
      table.excluded_columns.push_back(j);
      continue;
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (x.status(i, j) != EntryStatus::Observed) continue;
      const double d = x.value(i, j) - low_rank(i, j) - mean;
      ss += d * d;
    }
    const double t = 2.0 * std::sqrt(ss / static_cast<double>(count));
    table.threshold(j) = t;
    for (Index i = 0; i < n; ++i) {
      auto& c = table.classes[static_cast<std::size_t>(j * n + i)];
      if (sparse(i, j) > t) {
        c = SparseClass::High;
        ++table.high_per_row[static_cast<std::size_t>(i)];
      } else if (sparse(i, j) < -t) {
        c = SparseClass::Low;
        ++table.low_per_row[static_cast<std::size_t>(i)];
      }
    }
  }
  return table;
}

double relative_error(const Matrix& truth, const Matrix& pred,
                      const std::vector<EntryIndex>* mask) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
    throw ConfigError("relative_error: shape mismatch");
  double num = 0.0, den = 0.0;
  if (mask) {
    for (auto [i, j] : *mask) {
      const double d = truth(i, j) - pred(i, j);
      num += d * d;
      den += truth(i, j) * truth(i, j);
    }
  } else {
    num = (truth - pred).squaredNorm();
    den = truth.squaredNorm();
  }
  if (!(den > 0.0)) throw DomainError("relative error undefined: truth has zero norm");
  return std::sqrt(num / den);
}

namespace {

bool has_close_values(const Vector& s, Index k) {
  const double scale = s.size() > 0 ? s(0) : 0.0;
  for (Index i = 0; i + 1 < std::min<Index>(k + 1, s.size()); ++i)
    if (std::abs(s(i) - s(i + 1)) <= 1e-8 * scale) return true;
  return false;
}

}  // namespace

EigenvectorError eigenvector_error(const Matrix& truth, const Matrix& estimate, Index k,
                                   VectorSide side) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw ConfigError("eigenvector_error: shape mismatch");
  const Index max_k = std::min(truth.rows(), truth.cols());
  if (k < 1 || k > max_k) throw ConfigError("eigenvector_error: k out of range");

  Eigen::JacobiSVD<Matrix> st(truth, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::JacobiSVD<Matrix> se(estimate, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix vt = (side == VectorSide::Left ? st.matrixU() : st.matrixV()).leftCols(k);
  Matrix ve = (side == VectorSide::Left ? se.matrixU() : se.matrixV()).leftCols(k);

  EigenvectorError out;
  out.ambiguous = has_close_values(st.singularValues(), k) ||
                  has_close_values(se.singularValues(), k);

  const double denom = vt.norm();
  // Orthogonal Procrustes: R = argmin ||vt - ve R|| = W Z^T from svd(ve^T vt).
  Eigen::JacobiSVD<Matrix> cross(ve.transpose() * vt, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix rotation = cross.matrixU() * cross.matrixV().transpose();
  out.procrustes = (vt - ve * rotation).norm() / denom;

  for (Index c = 0; c < k; ++c)
    if (vt.col(c).dot(ve.col(c)) < 0.0) ve.col(c) = -ve.col(c);
  out.sign_aligned = (vt - ve).norm() / denom;
  return out;
}

SparsityStats sparsity_stats(const SparseEventTable& table, const Matrix* planted) {
  SparsityStats stats;
  const auto total = static_cast<double>(table.classes.size());
  std::size_t flagged = 0;
  for (auto c : table.classes) flagged += (c != SparseClass::Null);
  stats.non_null_fraction = total > 0 ? static_cast<double>(flagged) / total : 0.0;

  int max_high = 0, max_low = 0;
  for (std::size_t i = 0; i < table.high_per_row.size(); ++i) {
    max_high = std::max(max_high, table.high_per_row[i]);
    max_low = std::max(max_low, table.low_per_row[i]);
  }
  stats.histogram.assign(static_cast<std::size_t>(max_low + 1),
                         std::vector<int>(static_cast<std::size_t>(max_high + 1), 0));
  for (std::size_t i = 0; i < table.high_per_row.size(); ++i)
    ++stats.histogram[static_cast<std::size_t>(table.low_per_row[i])]
                     [static_cast<std::size_t>(table.high_per_row[i])];

  if (planted) {
    if (planted->rows() != table.rows || planted->cols() != table.cols)
      throw ConfigError("sparsity_stats: planted matrix shape mismatch");
    std::size_t planted_count = 0, hit = 0;
    for (Index j = 0; j < table.cols; ++j) {
      for (Index i = 0; i < table.rows; ++i) {
        if ((*planted)(i, j) == 0.0) continue;
        ++planted_count;
        hit += (table.at(i, j) == SparseClass::High);
      }
    }
    if (planted_count > 0)
      stats.capture_rate = static_cast<double>(hit) / static_cast<double>(planted_count);
  }
  return stats;
}

}  // namespace pcplod
