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

#include <optional>
#include <vector>

#include "pcplod/data_model.hpp"
#include "pcplod/proximal.hpp"

namespace pcplod {

/// Data-fit term of the objective.
enum class DataFit {
  /// Frobenius distance to the per-entry feasible set (LOD-aware).
  LodPenalty,
  /// Plain ||L + S - X||_F over all entries; requires all-Observed input.
  Frobenius,
};

struct PcpConfig {
  Index rank = 1;
  /// Defaults to 1/sqrt(n) when unset.
  std::optional<double> lambda;
  /// Defaults to sqrt(p/2) when unset.
  std::optional<double> mu;
  double rho = 1.0;
  double tol = 1e-6;
  int max_iter = 20000;
  int final_polish_passes = 10;
  /// Upper bound on extra polish passes spent driving the effective rank to `rank`.
  int max_polish_passes = 2000;
  bool residual_balancing = true;
  DataFit data_fit = DataFit::LodPenalty;

  double lambda_for(Index n) const;
  double mu_for(Index p) const;
  /// Throws ConfigError unless the configuration is valid for an n x p input.
  void validate(Index n, Index p) const;
};

struct SolverDiagnostics {
  std::vector<double> objective_trace;
  std::vector<double> primal_residual_trace;
  int iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  double final_rho = 0.0;
  /// Alternating passes used by the final polish of L.
  int polish_passes = 0;
  /// Rows of L zeroed because the polish did not reach the rank bound.
  int polish_rows_zeroed = 0;
  /// Iterations whose rank projection used the dense eigendecomposition.
  int dense_projections = 0;
  /// Set when the iterate was worse than L = S = 0 and was replaced by it.
  bool fell_back_to_zero = false;
};

struct Decomposition {
  Matrix low_rank;
  Matrix sparse;
  Index effective_rank = 0;
  double objective = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  SolverDiagnostics diagnostics;

  const std::vector<double>& objective_trace() const { return diagnostics.objective_trace; }
  int iterations() const { return diagnostics.iterations; }
  bool converged() const { return diagnostics.converged; }
};

/// lambda * ||S||_1 + mu * psi_lod(L + S); +infinity when L has a negative
/// entry or effective rank above cfg.rank.
double objective(const Matrix& low_rank, const Matrix& sparse, const MaskedMatrix& x,
                 const PcpConfig& cfg);

/// The finite part of the objective, without the rank / sign indicator.
double penalty(const Matrix& low_rank, const Matrix& sparse, const FeasibleSet& c,
               double lambda, double mu);

/// Low-rank + sparse decomposition of x with the LOD-aware square-root fit.
///
/// Three-block splitting on (Z, L, S) with consensus Z = L + S:
///   Z <- prox of (mu/rho) * psi_lod at L + S + U
///   L <- rank/non-negative projection of Z - S - U
///   S <- soft threshold of Z - L - U at lambda/rho
///   U <- U + L + S - Z
/// followed by a final polish that leaves L >= 0 with effective rank <= r.
/// Deterministic: identical inputs give bit-identical output.
Decomposition solve(const MaskedMatrix& x, const PcpConfig& cfg);

}  // namespace pcplod
