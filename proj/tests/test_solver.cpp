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


#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "generators.hpp"
#include "pcplod/error.hpp"
#include "pcplod/simulation.hpp"
#include "pcplod/solver.hpp"

using namespace pcplod;

namespace {

// Elementwise distance term written directly from the piecewise definition.
double lod_penalty_oracle(const Matrix& y, const MaskedMatrix& x) {
  double sum = 0.0;
  for (Index i = 0; i < y.rows(); ++i) {
    for (Index j = 0; j < y.cols(); ++j) {
      const double v = y(i, j);
      if (x.status(i, j) == EntryStatus::Observed) {
        sum += (v - x.value(i, j)) * (v - x.value(i, j));
      } else if (x.status(i, j) == EntryStatus::BelowLod) {
        if (v < 0.0) sum += v * v;
        if (v > x.delta(i, j)) sum += (v - x.delta(i, j)) * (v - x.delta(i, j));
      }
    }
  }
  return std::sqrt(sum);
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// Largest relative rise between consecutive 100-iteration windowed means.
double worst_window_rise(const std::vector<double>& trace, std::size_t window = 100) {
  if (trace.size() < window + 1) return 0.0;
  double sum = std::accumulate(trace.begin(), trace.begin() + static_cast<long>(window), 0.0);
  double prev = sum / static_cast<double>(window);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = window; k < trace.size(); ++k) {
    sum += trace[k] - trace[k - window];
    const double mean = sum / static_cast<double>(window);
    worst = std::max(worst, (mean - prev) / std::max(std::abs(prev), 1e-300));
    prev = mean;
  }
  return worst;
}

void check_feasible(const Decomposition& d, Index rank) {
  CHECK(d.low_rank.minCoeff() >= 0.0);
  CHECK(d.effective_rank <= rank);
  CHECK(effective_rank(d.low_rank) <= rank);
}

PcpConfig config_rank(Index r) {
  PcpConfig cfg;
  cfg.rank = r;
  return cfg;
}

}  // namespace

TEST_CASE("objective of the zero point is mu times the data norm") {
  // ||X||_F = 7.
  Matrix x(1, 3);
  x << 2.0, 3.0, 6.0;
  const auto m = MaskedMatrix::observed(x);
  PcpConfig cfg;
  cfg.lambda = 0.25;
  cfg.mu = 2.0;
  const Matrix zero = Matrix::Zero(1, 3);
  CHECK(objective(zero, zero, m, cfg) == doctest::Approx(14.0).epsilon(1e-15));
}

TEST_CASE("objective is infinite for a negative low-rank entry") {
  const auto m = MaskedMatrix::observed(Matrix::Ones(2, 2));
  Matrix l = Matrix::Ones(2, 2);
  l(1, 0) = -1e-12;
  const PcpConfig cfg = config_rank(2);
  CHECK(std::isinf(objective(l, Matrix::Zero(2, 2), m, cfg)));
}

TEST_CASE("objective is infinite above the rank bound") {
  const auto m = MaskedMatrix::observed(Matrix::Ones(3, 3));
  const PcpConfig cfg = config_rank(1);
  CHECK(std::isinf(objective(Matrix::Identity(3, 3), Matrix::Zero(3, 3), m, cfg)));
}

TEST_CASE("objective matches an elementwise re-implementation") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testgen::random_masked(5, 4, rng, 0.3, 0.2);
    const Matrix l = testgen::uniform_matrix(5, 4, rng, 0.0, 3.0);
    const Matrix s = testgen::normal_matrix(5, 4, rng);
    PcpConfig cfg = config_rank(4);
    cfg.lambda = rng.uniform(0.1, 1.0);
    cfg.mu = rng.uniform(0.5, 3.0);
    const double expected =
        *cfg.lambda * s.cwiseAbs().sum() + *cfg.mu * lod_penalty_oracle(l + s, x);
    CHECK(objective(l, s, x, cfg) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("default lambda and mu") {
  PcpConfig cfg;
  CHECK(cfg.lambda_for(400) == doctest::Approx(0.05));
  CHECK(cfg.mu_for(18) == doctest::Approx(3.0));
  cfg.lambda = 0.7;
  cfg.mu = 1.5;
  CHECK(cfg.lambda_for(400) == 0.7);
  CHECK(cfg.mu_for(18) == 1.5);
}

TEST_CASE("invalid configurations are rejected") {
  const auto x = MaskedMatrix::observed(Matrix::Ones(6, 4));
  auto bad = [&](auto edit) {
    PcpConfig cfg = config_rank(2);
    edit(cfg);
    CHECK_THROWS_AS(solve(x, cfg), ConfigError);
  };
  bad([](PcpConfig& c) { c.rank = 0; });
  bad([](PcpConfig& c) { c.rank = 5; });
  bad([](PcpConfig& c) { c.lambda = 0.0; });
  bad([](PcpConfig& c) { c.mu = -1.0; });
  bad([](PcpConfig& c) { c.rho = 0.0; });
  bad([](PcpConfig& c) { c.tol = 0.0; });
  bad([](PcpConfig& c) { c.max_iter = 0; });
}

TEST_CASE("Frobenius fit requires fully observed data") {
  Rng rng(5);
  const auto x = testgen::random_masked(8, 4, rng, 0.3, 0.0);
  PcpConfig cfg = config_rank(2);
  cfg.data_fit = DataFit::Frobenius;
  CHECK_THROWS_AS(solve(x, cfg), ConfigError);
}

TEST_CASE("all-zero input gives the zero decomposition") {
  for (Index r : {1, 2, 3}) {
    const auto x = MaskedMatrix::observed(Matrix::Zero(10, 3));
    const auto d = solve(x, config_rank(r));
    CHECK(d.low_rank.isZero(0.0));
    CHECK(d.sparse.isZero(0.0));
    CHECK(d.objective == 0.0);
  }
}

TEST_CASE("exact recovery of a planted non-negative rank-2 matrix") {
  Rng rng(2024);
  const Matrix truth = testgen::nonneg_low_rank(50, 8, 2, rng);
  const auto d = solve(MaskedMatrix::observed(truth), config_rank(2));
  CHECK((d.low_rank - truth).norm() / truth.norm() <= 1e-3);
  CHECK(d.sparse.cwiseAbs().sum() / truth.cwiseAbs().sum() <= 1e-3);
  check_feasible(d, 2);
}

TEST_CASE("planted spikes land in the sparse component") {
  Rng rng(3);
  const Index n = 200, p = 16;
  // Two patterns on disjoint column blocks, so both components are strong.
  Matrix h = testgen::uniform_matrix(2, p, rng, 0.0, 0.3);
  h.block(0, 0, 1, p / 2).array() += 1.0;
  h.block(1, p / 2, 1, p / 2).array() += 1.0;
  const Matrix base = testgen::uniform_matrix(n, 2, rng, 0.0, 2.0) * h;
  Matrix x = base;
  std::vector<EntryIndex> spikes;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i)
      if (rng.uniform() < 0.05) {
        x(i, j) += 10.0;
        spikes.emplace_back(i, j);
      }
  REQUIRE(!spikes.empty());
  const auto d = solve(MaskedMatrix::observed(x), config_rank(2));
  int flagged = 0;
  for (auto [i, j] : spikes) flagged += std::abs(d.sparse(i, j)) > 1.0;
  CHECK(flagged == static_cast<int>(spikes.size()));
  CHECK((d.low_rank - base).norm() / base.norm() <= 0.05);
}

TEST_CASE("quarter censoring with low noise stays in the reference error band") {
  SimScenario sc;
  sc.noise = NoiseStructure::LowGaussian;
  sc.lod_quantile = 0.25;
  sc.seed = 4242;
  const auto data = gen_dataset(sc);
  const auto d = solve(data.censored, config_rank(4));
  const double err = (d.low_rank - data.clean).norm() / data.clean.norm();
  CHECK(err >= 0.05);
  CHECK(err <= 0.13);
  check_feasible(d, 4);
}

TEST_CASE("non-finite iterates raise a numerical error") {
  Matrix x = Matrix::Ones(6, 4);
  x(0, 0) = 1e200;
  x(3, 2) = 1e300;
  PcpConfig cfg = config_rank(2);
  CHECK_THROWS_AS(solve(MaskedMatrix::observed(x), cfg), NumericalError);
}

TEST_CASE("numerical errors name the iteration") {
  Matrix x = Matrix::Ones(6, 4);
  x(0, 0) = std::numeric_limits<double>::max();
  try {
    (void)solve(MaskedMatrix::observed(x), config_rank(1));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("diagnostics traces have one entry per iteration") {
  Rng rng(8);
  const auto x = testgen::random_masked(30, 6, rng, 0.2, 0.05);
  const auto d = solve(x, config_rank(2));
  CHECK(d.diagnostics.objective_trace.size() == static_cast<std::size_t>(d.iterations()));
  CHECK(d.diagnostics.primal_residual_trace.size() == static_cast<std::size_t>(d.iterations()));
  CHECK(d.iterations() > 0);
}

TEST_CASE("converged flag follows the iteration cap") {
  Rng rng(9);
  const Matrix noisy = testgen::nonneg_low_rank(40, 6, 2, rng) + 0.5 * testgen::normal_matrix(40, 6, rng);
  const auto x = MaskedMatrix::observed(noisy.cwiseMax(0.0));
  PcpConfig cfg = config_rank(2);
  cfg.max_iter = 3;
  cfg.tol = 1e-14;
  const auto capped = solve(x, cfg);
  CHECK_FALSE(capped.converged());
  CHECK(capped.iterations() == 3);
  const auto full = solve(x, config_rank(2));
  CHECK(full.converged());
  CHECK(full.iterations() < PcpConfig{}.max_iter);
}

// Properties over random instances.

TEST_CASE("property: feasibility, determinism and zero-point sanity") {
  Rng rng(31337);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 20 + static_cast<Index>(rng.below(30 + 1));
    const Index p = 4 + static_cast<Index>(rng.below(6 + 1));
    const Index r = 1 + static_cast<Index>(rng.below(2 + 1));
    Matrix truth = testgen::nonneg_low_rank(n, p, r, rng) + 0.3 * testgen::normal_matrix(n, p, rng);
    truth = truth.cwiseMax(0.0);
    const MaskedMatrix censored = censor_columns(truth, rng.uniform(0.0, 0.5));
    const PcpConfig cfg = config_rank(r);
    const auto a = solve(censored, cfg);
    const auto b = solve(censored, cfg);
    check_feasible(a, r);
    CHECK(a.low_rank == b.low_rank);
    CHECK(a.sparse == b.sparse);
    const Matrix zero = Matrix::Zero(n, p);
    CHECK(objective(a.low_rank, a.sparse, censored, cfg) <= objective(zero, zero, censored, cfg));
    CHECK(a.objective == doctest::Approx(objective(a.low_rank, a.sparse, censored, cfg)));
  }
}

TEST_CASE("property: LOD penalty reduces to the Frobenius fit on observed data") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 30 + static_cast<Index>(rng.below(20 + 1));
    const Index p = 5 + static_cast<Index>(rng.below(5 + 1));
    const Index r = 1 + static_cast<Index>(rng.below(2 + 1));
    const Matrix x = testgen::nonneg_low_rank(n, p, r, rng) + 0.2 * testgen::normal_matrix(n, p, rng);
    const auto m = MaskedMatrix::observed(x.cwiseMax(0.0));
    PcpConfig lod = config_rank(r);
    PcpConfig fro = lod;
    fro.data_fit = DataFit::Frobenius;
    const auto a = solve(m, lod);
    const auto b = solve(m, fro);
    CHECK(rel_diff(a.low_rank, b.low_rank) <= 1e-8);
    CHECK(rel_diff(a.sparse, b.sparse) <= 1e-8);
  }
}

TEST_CASE("property: values stored at Missing positions have no influence") {
  Rng rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = testgen::random_masked(25, 5, rng, 0.1, 0.2);
    Matrix other = x.values();
    for (Index j = 0; j < other.cols(); ++j)
      for (Index i = 0; i < other.rows(); ++i)
        if (x.status(i, j) == EntryStatus::Missing) other(i, j) = rng.uniform(-1e6, 1e6);
    const MaskedMatrix y(other, x.statuses(), x.deltas());
    const auto a = solve(x, config_rank(2));
    const auto b = solve(y, config_rank(2));
    CHECK(a.low_rank == b.low_rank);
    CHECK(a.sparse == b.sparse);
  }
}

TEST_CASE("windowed objective mean is non-increasing on an uncensored instance") {
  Rng rng(4);
  const Matrix x = testgen::nonneg_low_rank(60, 8, 2, rng) + 0.1 * testgen::normal_matrix(60, 8, rng);
  const auto d = solve(MaskedMatrix::observed(x.cwiseMax(0.0)), config_rank(2));
  CHECK(worst_window_rise(d.objective_trace()) <= 1e-9);
}

// Known to fail on part of the instances: the trace is evaluated at iterates
// that are not yet consensus-feasible, and while the gap closes the windowed
// mean can rise by up to a few 1e-5 relative.
TEST_CASE("property: windowed objective mean is non-increasing" * doctest::may_fail()) {
  Rng rng(2718);
  const int trials = 60;
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Index n = 30 + static_cast<Index>(rng.below(60));
    const Index p = 5 + static_cast<Index>(rng.below(12));
    const Index r = 1 + static_cast<Index>(rng.below(3));
    Matrix truth = testgen::nonneg_low_rank(n, p, r, rng) + 0.3 * testgen::normal_matrix(n, p, rng);
    const MaskedMatrix x = censor_columns(truth.cwiseMax(0.0), rng.uniform(0.0, 0.3));
    const double rise = worst_window_rise(solve(x, config_rank(r)).objective_trace());
    if (rise > 1e-9) ++violations;
    worst = std::max(worst, rise);
  }
  MESSAGE("windowed-mean violations: " << violations << " of " << trials
                                       << ", worst relative rise " << worst);
  CHECK(violations == 0);
}
