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

/// Per-entry admissible interval for the fitted value L + S.
///
/// Observed entries pin the fit to the observed value, BelowLod entries allow
/// anything in [0, delta], Missing entries are unconstrained.
class FeasibleSet {
 public:
  explicit FeasibleSet(const MaskedMatrix& x);

  Index rows() const { return lower_.rows(); }
  Index cols() const { return lower_.cols(); }

  double lower(Index i, Index j) const { return lower_(i, j); }
  double upper(Index i, Index j) const { return upper_(i, j); }
  const double* lower_data() const { return lower_.data(); }
  const double* upper_data() const { return upper_.data(); }

 private:
  Matrix lower_;
  Matrix upper_;
};

struct TruncatedSvd {
  Matrix u;      ///< n x r, orthonormal columns
  Vector sigma;  ///< non-increasing, non-negative
  Matrix v;      ///< p x r, orthonormal columns

  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

/// Leading `rank` singular triplets of `m`.
TruncatedSvd truncated_svd(const Matrix& m, Index rank);

/// Best rank-`rank` approximation of `m` in Frobenius norm (Eckart-Young),
/// computed from the leading eigenvectors of the smaller Gram matrix.
Matrix best_rank_approximation(const Matrix& m, Index rank);

/// Best rank-r approximation for a sequence of slowly changing matrices.
///
/// Keeps an oversampled basis of the leading right singular subspace and
/// refines it by block subspace iteration with Rayleigh-Ritz, warm-started
/// from the previous call, until the Ritz residual of the leading r pairs is
/// below 1e-10 of the largest Ritz value. Falls back to the dense Gram
/// eigendecomposition on the first call or when refinement stalls.
class RankProjector {
 public:
  explicit RankProjector(Index rank, Index oversample = 4, int max_refinements = 10);

  Matrix project(const Matrix& m);

  /// Calls that needed the dense fallback.
  int dense_calls() const { return dense_calls_; }

 private:
  Matrix project_dense(const Matrix& m);

  Index rank_;
  Index oversample_;
  int max_refinements_;
  Matrix basis_;  // p x (rank + oversample), orthonormal, Ritz order
  int dense_calls_ = 0;
};

/// Number of singular values above 1e-9 times the largest.
Index effective_rank(const Matrix& m);
inline constexpr double kEffectiveRankTolerance = 1e-9;

/// Elementwise sign(m) * max(|m| - tau, 0).
Matrix soft_threshold(const Matrix& m, double tau);

/// Alternates rank-`rank` truncation with clipping at zero, `passes` times,
/// finishing on the clip so the result is elementwise non-negative.
Matrix project_rank_nonneg(const Matrix& m, Index rank, int passes);

/// Euclidean projection of y onto the feasible set.
Matrix project_feasible(const Matrix& y, const FeasibleSet& c);

/// Frobenius distance from y to the feasible set; this is the LOD penalty
/// evaluated at the fitted matrix y = L + S.
double psi_lod(const Matrix& y, const FeasibleSet& c);

/// Proximal operator of t * psi_lod(., c) at y.
Matrix prox_mu_dist(const Matrix& y, const FeasibleSet& c, double t);

/// Proximal operator of t * ||. - x||_F at y (plain square-root data fit).
Matrix prox_frobenius(const Matrix& y, const Matrix& x, double t);

}  // namespace pcplod
