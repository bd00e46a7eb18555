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


#include "pcplod/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcplod/error.hpp"

namespace pcplod {

double PcpConfig::lambda_for(Index n) const {
  return lambda ? *lambda : 1.0 / std::sqrt(static_cast<double>(n));
}

double PcpConfig::mu_for(Index p) const {
  return mu ? *mu : std::sqrt(static_cast<double>(p) / 2.0);
}

void PcpConfig::validate(Index n, Index p) const {
  if (rank < 1 || rank > std::min(n, p))
    throw ConfigError("rank " + std::to_string(rank) + " must lie in [1, min(n, p) = " +
                      std::to_string(std::min(n, p)) + "]");
  if (!(lambda_for(n) > 0.0)) throw ConfigError("lambda must be positive");
  if (!(mu_for(p) > 0.0)) throw ConfigError("mu must be positive");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (final_polish_passes < 1) throw ConfigError("final_polish_passes must be positive");
  if (max_polish_passes < final_polish_passes)
    throw ConfigError("max_polish_passes must be at least final_polish_passes");
}

double penalty(const Matrix& low_rank, const Matrix& sparse, const FeasibleSet& c,
               double lambda, double mu) {
  return lambda * sparse.cwiseAbs().sum() + mu * psi_lod(low_rank + sparse, c);
}

double objective(const Matrix& low_rank, const Matrix& sparse, const MaskedMatrix& x,
                 const PcpConfig& cfg) {
  if (low_rank.rows() != x.rows() || low_rank.cols() != x.cols() ||
      sparse.rows() != x.rows() || sparse.cols() != x.cols())
    throw ConfigError("objective: shape mismatch");
  constexpr double inf = std::numeric_limits<double>::infinity();
  if ((low_rank.array() < 0.0).any()) return inf;
  if (effective_rank(low_rank) > cfg.rank) return inf;
  return penalty(low_rank, sparse, FeasibleSet(x), cfg.lambda_for(x.rows()),
                 cfg.mu_for(x.cols()));
}

namespace {

// Residual balancing cadence; rho is frozen afterwards so the tail runs with a
// fixed penalty parameter.
constexpr int kBalanceEvery = 10;
constexpr int kBalanceUntil = 500;
constexpr double kBalanceQuiet = 1e-4;

// Alternating projections until the clipped matrix has effective rank <= r.
// Each pass is truncate-then-clip; at least `min_passes` are run. When the clip
// moves the truncated matrix by at most 1e-10 * ||T||_F, Weyl's inequality
// bounds the trailing singular values below the effective-rank cutoff.
Matrix polish_low_rank(const Matrix& l, Index rank, int min_passes, int max_passes,
                       SolverDiagnostics& diag) {
  Matrix out = l;
  int passes = 0;
  while (passes < max_passes) {
    const Matrix truncated = best_rank_approximation(out, rank);
    out = truncated.cwiseMax(0.0);
    ++passes;
    if (passes >= min_passes && (out - truncated).norm() <= 1e-10 * truncated.norm()) break;
  }
  diag.polish_passes = passes;
  if (effective_rank(out) <= rank) return out;

  // Rows of a rank-r matrix span at most r dimensions; zeroing rows that the
  // clip would touch keeps the rank bound and the sign constraint exact.
  Matrix truncated = truncated_svd(out, rank).reconstruct();
  for (Index i = 0; i < truncated.rows(); ++i) {
    if ((truncated.row(i).array() < 0.0).any()) {
      truncated.row(i).setZero();
      ++diag.polish_rows_zeroed;
    }
  }
  return truncated;
}

}  // namespace

namespace {

constexpr double kWarmStartClip = 3.0;

double median_in_place(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

// Warm-start matrix with each column capped at median + 3 * MAD of its
// Observed entries, so large isolated values do not steer the initial
// subspace. Columns with zero MAD are left alone.
Matrix clipped_warm_start(const MaskedMatrix& x) {
  Matrix x0 = x.warm_start();
  std::vector<double> v;
  for (Index j = 0; j < x.cols(); ++j) {
    v.clear();
    for (Index i = 0; i < x.rows(); ++i)
      if (x.status(i, j) == EntryStatus::Observed) v.push_back(x.value(i, j));
    if (v.size() < 2) continue;
    const double med = median_in_place(v);
    for (auto& e : v) e = std::abs(e - med);
    const double mad = 1.4826 * median_in_place(v);
    if (mad > 0.0) x0.col(j) = x0.col(j).cwiseMin(med + kWarmStartClip * mad);
  }
  return x0;
}

// Projection of one fitted entry onto its admissible interval.
struct LodTarget {
  const double* lower;
  const double* upper;
  double operator()(Index k, double y) const { return std::clamp(y, lower[k], upper[k]); }
};

// Plain square-root fit: every entry is pinned to its observed value.
struct FrobeniusTarget {
  const double* values;
  double operator()(Index k, double) const { return values[k]; }
};

template <typename Target>
void run_iterations(const Target& target, Index rank, double lambda, double mu,
                    const PcpConfig& cfg, Matrix& low_rank, Matrix& sparse,
                    SolverDiagnostics& diag) {
  const Index n = low_rank.rows(), p = low_rank.cols(), size = n * p;
  Matrix dual = Matrix::Zero(n, p);
  Matrix consensus(n, p);
  Matrix work(n, p);
  double rho = cfg.rho;
  RankProjector projector(rank);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    double* L = low_rank.data();
    double* S = sparse.data();
    double* U = dual.data();
    double* Z = consensus.data();
    double* W = work.data();

    // Z-step: prox of (mu / rho) * distance at Y = L + S + U.
    double dist2 = 0.0;
    for (Index k = 0; k < size; ++k) {
      const double y = L[k] + S[k] + U[k];
      const double r = y - target(k, y);
      W[k] = y;
      dist2 += r * r;
    }
    const double t = mu / rho;
    const double dist = std::sqrt(dist2);
    const double step = dist <= t ? 1.0 : t / dist;
    for (Index k = 0; k < size; ++k) {
      const double y = W[k];
      const double z = y + step * (target(k, y) - y);
      Z[k] = z;
      W[k] = z - S[k] - U[k];
    }

    // L-step: rank-r truncation of Z - S - U, then clip at zero.
    const Matrix truncated = projector.project(work);
    const double* T = truncated.data();

    // S-step, dual update and all per-iteration norms in one pass.
    const double tau = lambda / rho;
    double primal2 = 0.0, fit_change2 = 0.0, dl2 = 0.0, ds2 = 0.0, l2 = 0.0, s2 = 0.0;
    double l1 = 0.0, resid2 = 0.0;
    for (Index k = 0; k < size; ++k) {
      const double l_new = std::max(T[k], 0.0);
      const double v = Z[k] - l_new - U[k];
      const double a = std::abs(v) - tau;
      const double s_new = a <= 0.0 ? 0.0 : (v > 0.0 ? a : -a);
      const double fit = l_new + s_new;
      const double gap = fit - Z[k];
      const double fit_change = fit - (L[k] + S[k]);
      const double r = fit - target(k, fit);
      dl2 += (l_new - L[k]) * (l_new - L[k]);
      ds2 += (s_new - S[k]) * (s_new - S[k]);
      U[k] += gap;
      L[k] = l_new;
      S[k] = s_new;
      primal2 += gap * gap;
      fit_change2 += fit_change * fit_change;
      l2 += l_new * l_new;
      s2 += s_new * s_new;
      l1 += std::abs(s_new);
      resid2 += r * r;
    }

    const double primal = std::sqrt(primal2);
    const double dual_res = rho * std::sqrt(fit_change2);
    const double obj = lambda * l1 + mu * std::sqrt(resid2);
    if (!std::isfinite(obj) || !std::isfinite(primal) || !std::isfinite(dual_res))
      throw NumericalError("solver diverged: non-finite iterate at iteration " +
                           std::to_string(iter));
    diag.objective_trace.push_back(obj);
    diag.primal_residual_trace.push_back(primal);
    diag.iterations = iter;

    const double change = std::max(std::sqrt(dl2) / (1.0 + std::sqrt(l2)),
                                   std::sqrt(ds2) / (1.0 + std::sqrt(s2)));
    if (change < cfg.tol) {
      diag.converged = true;
      break;
    }

    if (cfg.residual_balancing && iter % kBalanceEvery == 0 && iter <= kBalanceUntil) {
      // Halving rho doubles U and moves the L-step input away from L; near a
      // fixed point of the non-convex rank projection that can throw the
      // iterate onto another subspace, so it is skipped once both residuals
      // are small.
      const bool settled =
          std::max(primal, dual_res) < kBalanceQuiet * (1.0 + std::sqrt(l2));
      if (primal > 10.0 * dual_res) {
        rho *= 2.0;
        dual /= 2.0;
      } else if (dual_res > 10.0 * primal && !settled) {
        rho /= 2.0;
        dual *= 2.0;
      }
    }
  }
  diag.final_rho = rho;
  diag.dense_projections = projector.dense_calls();
}

}  // namespace

Decomposition solve(const MaskedMatrix& x, const PcpConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = x.rows(), p = x.cols();
  cfg.validate(n, p);
  if (cfg.data_fit == DataFit::Frobenius && !x.all_observed())
    throw ConfigError("the plain Frobenius data fit requires all entries Observed");

  Decomposition out;
  out.lambda = cfg.lambda_for(n);
  out.mu = cfg.mu_for(p);
  auto& diag = out.diagnostics;
  const FeasibleSet feasible(x);

  Matrix low_rank = project_rank_nonneg(clipped_warm_start(x), cfg.rank, 1);
  Matrix sparse = Matrix::Zero(n, p);
  if (cfg.data_fit == DataFit::LodPenalty) {
    run_iterations(LodTarget{feasible.lower_data(), feasible.upper_data()}, cfg.rank,
                   out.lambda, out.mu, cfg, low_rank, sparse, diag);
  } else {
    run_iterations(FrobeniusTarget{x.values().data()}, cfg.rank, out.lambda, out.mu, cfg,
                   low_rank, sparse, diag);
  }

  low_rank = polish_low_rank(low_rank, cfg.rank, cfg.final_polish_passes,
                             cfg.max_polish_passes, diag);

  out.low_rank = std::move(low_rank);
  out.sparse = std::move(sparse);
  out.objective = penalty(out.low_rank, out.sparse, feasible, out.lambda, out.mu);
  // Never return a point worse than the trivial L = S = 0.
  const double zero_objective = penalty(Matrix::Zero(n, p), Matrix::Zero(n, p), feasible,
                                        out.lambda, out.mu);
  if (out.objective > zero_objective) {
    out.low_rank.setZero();
    out.sparse.setZero();
    out.objective = zero_objective;
    diag.fell_back_to_zero = true;
  }
  out.effective_rank = effective_rank(out.low_rank);
  diag.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pcplod
