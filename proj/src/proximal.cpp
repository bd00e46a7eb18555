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


#include "pcplod/proximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcplod/error.hpp"

namespace pcplod {

FeasibleSet::FeasibleSet(const MaskedMatrix& x)
    : lower_(x.rows(), x.cols()), upper_(x.rows(), x.cols()) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      switch (x.status(i, j)) {
        case EntryStatus::Observed:
          lower_(i, j) = upper_(i, j) = x.value(i, j);
          break;
        case EntryStatus::BelowLod:
          lower_(i, j) = 0.0;
          upper_(i, j) = x.delta(i, j);
          break;
        case EntryStatus::Missing:
          lower_(i, j) = -inf;
          upper_(i, j) = inf;
          break;
      }
    }
  }
}

TruncatedSvd truncated_svd(const Matrix& m, Index rank) {
  const Index k = std::min(m.rows(), m.cols());
  if (rank < 1 || rank > k)
    throw ConfigError("truncated_svd: rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(k) + "]");
  if (!m.allFinite()) throw NumericalError("truncated_svd: input has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("truncated_svd: Jacobi SVD failed to converge after " +
                         std::to_string(svd.nonzeroSingularValues()) + " nonzero values");
  TruncatedSvd out{svd.matrixU().leftCols(rank), svd.singularValues().head(rank),
                   svd.matrixV().leftCols(rank)};
  return out;
}

Index effective_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = kEffectiveRankTolerance * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) r += (s(i) > cut);
  return r;
}

Matrix soft_threshold(const Matrix& m, double tau) {
  if (tau < 0.0) throw ConfigError("soft_threshold: tau must be non-negative");
  return m.unaryExpr([tau](double v) {
    const double a = std::abs(v) - tau;
    if (a <= 0.0) return 0.0;
    return v > 0.0 ? a : -a;
  });
}

Matrix best_rank_approximation(const Matrix& m, Index rank) {
  const Index k = std::min(m.rows(), m.cols());
  if (rank < 1 || rank > k)
    throw ConfigError("rank " + std::to_string(rank) + " outside [1, " + std::to_string(k) + "]");
  if (!m.allFinite()) throw NumericalError("rank projection: input has non-finite entries");
  if (rank == k) return m;
  // Project onto the leading eigenvectors of the smaller Gram matrix. Only the
  // subspace is needed, so the squared conditioning of the Gram matrix does not
  // affect the projection beyond rounding of order eps * sigma_1.
  const bool tall = m.rows() >= m.cols();
  const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericalError("rank projection: eigensolver failed on a " +
                         std::to_string(gram.rows()) + "x" + std::to_string(gram.cols()) +
                         " Gram matrix");
  const Matrix basis = eig.eigenvectors().rightCols(rank);
  if (tall) return (m * basis) * basis.transpose();
  return basis * (basis.transpose() * m);
}

RankProjector::RankProjector(Index rank, Index oversample, int max_refinements)
    : rank_(rank), oversample_(oversample), max_refinements_(max_refinements) {
  if (rank < 1) throw ConfigError("RankProjector: rank must be positive");
}

Matrix RankProjector::project_dense(const Matrix& m) {
  ++dense_calls_;
  const Index block = std::min(rank_ + oversample_, m.cols());
  const Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw NumericalError("rank projection: eigensolver failed");
  basis_ = eig.eigenvectors().rightCols(block).rowwise().reverse();
  const Matrix top = basis_.leftCols(rank_);
  return (m * top) * top.transpose();
}

Matrix RankProjector::project(const Matrix& m) {
  const Index k = std::min(m.rows(), m.cols());
  if (rank_ > k)
    throw ConfigError("rank " + std::to_string(rank_) + " outside [1, " + std::to_string(k) + "]");
  if (!m.allFinite()) throw NumericalError("rank projection: input has non-finite entries");
  if (rank_ == k) return m;
  if (m.rows() < m.cols()) {
    // Work on the transpose so the basis lives in the smaller dimension.
    Matrix t = m.transpose();
    return project(t).transpose();
  }
  const Index block = std::min(rank_ + oversample_, m.cols());
  if (basis_.rows() != m.cols() || basis_.cols() != block) return project_dense(m);

  Matrix basis = basis_;
  for (int refinement = 0; refinement < max_refinements_; ++refinement) {
    const Matrix image = m * basis;                   // n x b
    const Matrix gram_basis = m.transpose() * image;  // p x b, G * basis
    const Matrix ritz = basis.transpose() * gram_basis;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(ritz);
    if (eig.info() != Eigen::Success) break;
    const Matrix rot = eig.eigenvectors().rowwise().reverse();
    const Vector theta = eig.eigenvalues().reverse();
    const Matrix lead = basis * rot.leftCols(rank_);
    const Matrix residual =
        gram_basis * rot.leftCols(rank_) - lead * theta.head(rank_).asDiagonal();
    if (theta(0) > 0.0 && residual.norm() <= 1e-10 * theta(0)) {
      basis_ = basis * rot;
      return (image * rot.leftCols(rank_)) * lead.transpose();
    }
    if (!(theta(0) > 0.0)) break;
    Eigen::HouseholderQR<Matrix> qr(gram_basis * rot);
    basis = qr.householderQ() * Matrix::Identity(m.cols(), block);
  }
  return project_dense(m);
}

Matrix project_rank_nonneg(const Matrix& m, Index rank, int passes) {
  if (passes < 1) throw ConfigError("project_rank_nonneg: passes must be positive");
  Matrix out = m;
  for (int pass = 0; pass < passes; ++pass)
    out = best_rank_approximation(out, rank).cwiseMax(0.0);
  return out;
}

Matrix project_feasible(const Matrix& y, const FeasibleSet& c) {
  Matrix out(y.rows(), y.cols());
  for (Index j = 0; j < y.cols(); ++j)
    for (Index i = 0; i < y.rows(); ++i)
      out(i, j) = std::clamp(y(i, j), c.lower(i, j), c.upper(i, j));
  return out;
}

double psi_lod(const Matrix& y, const FeasibleSet& c) {
  double ss = 0.0;
  for (Index j = 0; j < y.cols(); ++j) {
    for (Index i = 0; i < y.rows(); ++i) {
      const double v = y(i, j);
      double r = 0.0;
      if (v < c.lower(i, j)) r = v - c.lower(i, j);
      else if (v > c.upper(i, j)) r = v - c.upper(i, j);
      ss += r * r;
    }
  }
  return std::sqrt(ss);
}

Matrix prox_mu_dist(const Matrix& y, const FeasibleSet& c, double t) {
  if (!(t > 0.0)) throw ConfigError("prox_mu_dist: step must be positive");
  Matrix p = project_feasible(y, c);
  const double d = (y - p).norm();
  if (d <= t) return p;
  return y + (t / d) * (p - y);
}

Matrix prox_frobenius(const Matrix& y, const Matrix& x, double t) {
  if (!(t > 0.0)) throw ConfigError("prox_frobenius: step must be positive");
  const double d = (y - x).norm();
  if (d <= t) return x;
  return y + (t / d) * (x - y);
}

}  // namespace pcplod
