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


#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>

#include "doctest.h"
#include "generators.hpp"
#include "pcplod/error.hpp"
#include "pcplod/evaluation.hpp"
#include "pcplod/patterns.hpp"
#include "pcplod/simulation.hpp"
#include "pcplod/solver.hpp"

using namespace pcplod;

namespace {

// Top-k left singular vectors from the eigenvectors of M M^T, descending.
Matrix oracle_left_vectors(const Matrix& m, Index k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m * m.transpose());
  return es.eigenvectors().rightCols(k).rowwise().reverse();
}

Matrix orthonormal(Index n, Index k, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(testgen::normal_matrix(n, k, rng));
  return qr.householderQ() * Matrix::Identity(n, k);
}

}  // namespace

TEST_CASE("rank-one L has a single pattern with full share") {
  Rng rng(1);
  const Matrix l = testgen::uniform_matrix(10, 1, rng) * testgen::uniform_matrix(1, 5, rng);
  const auto m = extract_patterns(l, 1);
  CHECK(m.explained_share(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diag(2, 1) in a 4x4 matrix gives shares (0.8, 0.2)") {
  Matrix l = Matrix::Zero(4, 4);
  l(0, 0) = 2.0;
  l(1, 1) = 1.0;
  const auto m = extract_patterns(l, 2);
  CHECK(m.explained_share(0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(m.explained_share(1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(m.singular_values(0) == doctest::Approx(2.0));
}

TEST_CASE("extract_patterns rejects k above the effective rank") {
  Matrix l = Matrix::Zero(4, 4);
  l(0, 0) = 1.0;
  CHECK_THROWS_AS(extract_patterns(l, 2), ConfigError);
}

TEST_CASE("property: pattern factors are orthonormal and shares ordered") {
  Rng rng(2);
  for (int t = 0; t < 15; ++t) {
    const Matrix l = testgen::nonneg_low_rank(30, 8, 3, rng);
    const auto m = extract_patterns(l, 3);
    CHECK((m.left_vectors.transpose() * m.left_vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((m.right_vectors.transpose() * m.right_vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(m.explained_share.sum() <= 1.0 + 1e-12);
    for (Index i = 1; i < 3; ++i) CHECK(m.explained_share(i) <= m.explained_share(i - 1));
    const auto scaled = extract_patterns(3.7 * l, 3);
    CHECK((scaled.explained_share - m.explained_share).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("zero S classifies every entry Null") {
  Rng rng(3);
  const Matrix x = testgen::uniform_matrix(10, 3, rng);
  const auto table = classify_sparse(Matrix::Zero(10, 3), MaskedMatrix::observed(x), Matrix::Zero(10, 3));
  for (auto c : table.classes) CHECK(c == SparseClass::Null);
  const auto stats = sparsity_stats(table);
  CHECK(stats.non_null_fraction == 0.0);
}

TEST_CASE("threshold rule at residual sd 1") {
  // Residual column (+1, -1, +1, -1): population sd 1, threshold 2.
  Matrix x(4, 1);
  x << 2.0, 0.0, 2.0, 0.0;
  const Matrix l = Matrix::Constant(4, 1, 1.0);
  Matrix s(4, 1);
  s << 2.5, -2.5, 1.9, 0.0;
  const auto table = classify_sparse(s, MaskedMatrix::observed(x), l);
  CHECK(table.threshold(0) == doctest::Approx(2.0));
  CHECK(table.at(0, 0) == SparseClass::High);
  CHECK(table.at(1, 0) == SparseClass::Low);
  CHECK(table.at(2, 0) == SparseClass::Null);
  CHECK(table.at(3, 0) == SparseClass::Null);
  CHECK(table.high_per_row == std::vector<int>{1, 0, 0, 0});
  CHECK(table.low_per_row == std::vector<int>{0, 1, 0, 0});
}

TEST_CASE("thresholds ignore censored and missing entries") {
  Matrix v(6, 1);
  v << 2.0, 0.0, 2.0, 0.0, 0.0, 0.0;
  StatusGrid g(6, 1);
  g(4, 0) = EntryStatus::BelowLod;
  g(5, 0) = EntryStatus::Missing;
  const MaskedMatrix x(v, g, Matrix::Constant(6, 1, 0.1));
  Matrix l = Matrix::Constant(6, 1, 1.0);
  l(4, 0) = 50.0;
  l(5, 0) = -50.0;
  const auto table = classify_sparse(Matrix::Zero(6, 1), x, l);
  CHECK(table.threshold(0) == doctest::Approx(2.0));
}

TEST_CASE("columns with fewer than two Observed entries are excluded") {
  StatusGrid g(3, 2);
  g(0, 1) = g(1, 1) = EntryStatus::BelowLod;
  const MaskedMatrix x(Matrix::Ones(3, 2), g, Matrix::Constant(3, 2, 0.5));
  Matrix s = Matrix::Constant(3, 2, 100.0);
  const auto table = classify_sparse(s, x, Matrix::Zero(3, 2));
  CHECK(table.excluded_columns == std::vector<Index>{1});
  CHECK(std::isnan(table.threshold(1)));
  for (Index i = 0; i < 3; ++i) CHECK(table.at(i, 1) == SparseClass::Null);
}

TEST_CASE("histogram counts participants by low and high events") {
  // Residual X - L per column is (+-1, -+1, 0): population sd sqrt(2/3).
  Matrix x = Matrix::Constant(3, 4, 2.0);
  x.row(0) << 3.0, 1.0, 3.0, 1.0;
  x.row(1) << 1.0, 3.0, 1.0, 3.0;
  const Matrix l = Matrix::Constant(3, 4, 2.0);
  Matrix s = Matrix::Zero(3, 4);
  s(0, 0) = 5.0;
  s(0, 1) = 5.0;
  s(0, 2) = -5.0;
  s(2, 3) = 5.0;
  const auto table = classify_sparse(s, MaskedMatrix::observed(x), l);
  const auto stats = sparsity_stats(table);
  CHECK(stats.histogram.at(1).at(2) == 1);  // one Low, two High
  CHECK(stats.histogram.at(0).at(1) == 1);
  CHECK(stats.histogram.at(0).at(0) == 1);
  int total = 0;
  for (const auto& row : stats.histogram)
    for (int c : row) total += c;
  CHECK(total == 3);
  CHECK(stats.non_null_fraction == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("capture rate equals the set-intersection oracle") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Index n = 40, p = 5;
    const Matrix l = Matrix::Constant(n, p, 10.0);
    const Matrix x = l + testgen::normal_matrix(n, p, rng);
    const Matrix s = 3.0 * testgen::normal_matrix(n, p, rng);
    Matrix planted = Matrix::Zero(n, p);
    for (Index k = 0; k < planted.size(); ++k)
      if (rng.uniform() < 0.1) planted.data()[k] = 7.0;
    const auto table = classify_sparse(s, MaskedMatrix::observed(x), l);
    std::set<Index> high, truth;
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) {
        if (table.at(i, j) == SparseClass::High) high.insert(j * n + i);
        if (planted(i, j) != 0.0) truth.insert(j * n + i);
      }
    std::vector<Index> both;
    std::set_intersection(high.begin(), high.end(), truth.begin(), truth.end(),
                          std::back_inserter(both));
    const auto stats = sparsity_stats(table, &planted);
    REQUIRE(stats.capture_rate.has_value());
    CHECK(*stats.capture_rate ==
          doctest::Approx(static_cast<double>(both.size()) / static_cast<double>(truth.size())));
  }
}

TEST_CASE("planted spikes are mostly classified High") {
  SimScenario sc;
  sc.noise = NoiseStructure::LowPlusSparse;
  sc.seed = 55;
  const auto data = gen_dataset(sc);
  PcpConfig cfg;
  cfg.rank = 4;
  const auto d = solve(data.censored, cfg);
  const auto table = classify_sparse(d.sparse, data.censored, d.low_rank);
  const auto stats = sparsity_stats(table, &data.sparse_truth);
  CHECK(*stats.capture_rate >= 0.5);
}

TEST_CASE("relative_error examples") {
  Matrix t(1, 2);
  t << 3.0, 4.0;
  CHECK(relative_error(t, t) == 0.0);
  CHECK(relative_error(t, Matrix::Zero(1, 2)) == 1.0);
  Matrix truth(2, 2);
  truth << 1.0, 2.0, 3.0, 4.0;
  Matrix pred = truth;
  pred.row(1).setZero();
  const std::vector<EntryIndex> row2 = {{1, 0}, {1, 1}};
  CHECK(relative_error(truth, pred, &row2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(relative_error(Matrix::Zero(2, 2), pred), DomainError);
  CHECK_THROWS_AS(relative_error(truth, Matrix::Zero(3, 2)), ConfigError);
}

TEST_CASE("property: relative_error is zero on the truth and scale invariant") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = testgen::normal_matrix(6, 4, rng);
    const Matrix b = testgen::normal_matrix(6, 4, rng);
    std::vector<EntryIndex> mask;
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 6; ++i)
        if (rng.uniform() < 0.5) mask.emplace_back(i, j);
    if (mask.empty()) mask.emplace_back(0, 0);
    CHECK(relative_error(a, a, &mask) == 0.0);
    const double c = rng.uniform(0.1, 10.0);
    CHECK(relative_error(c * a, c * b, &mask) ==
          doctest::Approx(relative_error(a, b, &mask)).epsilon(1e-12));
  }
}

TEST_CASE("eigenvector_error of identical inputs is zero") {
  Rng rng(7);
  const Matrix m = testgen::nonneg_low_rank(20, 6, 3, rng);
  for (auto side : {VectorSide::Left, VectorSide::Right}) {
    const auto e = eigenvector_error(m, m, 3, side);
    CHECK(e.sign_aligned <= 1e-12);
    CHECK(e.procrustes <= 1e-12);
  }
}

TEST_CASE("property: eigenvector_error ignores singular vector signs") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const Matrix u = orthonormal(15, 3, rng);
    const Matrix v = orthonormal(6, 3, rng);
    const Vector s = Eigen::Vector3d(5.0, 3.0, 1.0);
    const Matrix m = u * s.asDiagonal() * v.transpose();
    Matrix uf = u, vf = v;
    uf.col(1) *= -1.0;
    vf.col(1) *= -1.0;
    const Matrix same = uf * s.asDiagonal() * vf.transpose();
    const Matrix pert = m + 1e-3 * testgen::normal_matrix(15, 6, rng);
    for (auto side : {VectorSide::Left, VectorSide::Right}) {
      CHECK(eigenvector_error(m, same, 3, side).sign_aligned <= 1e-10);
      CHECK(eigenvector_error(m, pert, 3, side).sign_aligned ==
            doctest::Approx(eigenvector_error(-1.0 * m, pert, 3, side).sign_aligned).epsilon(1e-9));
    }
  }
}

TEST_CASE("eigenvector_error matches a perturbation oracle") {
  // First-order bound: ||sin Theta|| <= ||E|| / gap; the sign-aligned error
  // is compared with the direct eigendecomposition of the perturbed matrix.
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const Matrix u = orthonormal(20, 3, rng);
    const Matrix v = orthonormal(8, 3, rng);
    const Matrix truth = u * Eigen::Vector3d(10.0, 6.0, 3.0).asDiagonal() * v.transpose();
    const Matrix e = testgen::normal_matrix(20, 8, rng);
    const Matrix est = truth + 1e-4 * e / e.norm();
    const auto err = eigenvector_error(truth, est, 3, VectorSide::Left);
    // Oracle: sign-align the eigenvectors of est est^T to those of truth truth^T.
    const Matrix ut = oracle_left_vectors(truth, 3);
    Matrix ue = oracle_left_vectors(est, 3);
    for (Index k = 0; k < 3; ++k)
      if (ut.col(k).dot(ue.col(k)) < 0.0) ue.col(k) *= -1.0;
    const double oracle = (ut - ue).norm() / ut.norm();
    CHECK(err.sign_aligned == doctest::Approx(oracle).epsilon(1e-4));
    const double gap = 3.0;  // smallest gap among (10, 6, 3, 0)
    CHECK(err.sign_aligned <= 2.0 * 1e-4 / gap);
    CHECK_FALSE(err.ambiguous);
  }
}

TEST_CASE("repeated singular values are flagged ambiguous") {
  Matrix m = Matrix::Zero(5, 5);
  m(0, 0) = 2.0;
  m(1, 1) = 2.0;
  m(2, 2) = 1.0;
  const auto e = eigenvector_error(m, m, 2, VectorSide::Right);
  CHECK(e.ambiguous);
  CHECK(e.procrustes <= 1e-12);
  CHECK_THROWS_AS(eigenvector_error(m, m, 0, VectorSide::Left), ConfigError);
}

TEST_CASE("evaluate_prediction reports every stratum") {
  SimScenario sc;
  sc.seed = 3;
  const auto data = gen_dataset(sc);
  const auto rows = evaluate_prediction(data.clean, data.censored, data.clean, 4, "s", "m", 1);
  int relative = 0;
  for (const auto& r : rows) {
    CHECK(r.scenario == "s");
    CHECK(r.method == "m");
    CHECK(r.replicate == 1);
    if (r.metric == "relative_error") {
      ++relative;
      CHECK(r.value == 0.0);
    }
  }
  CHECK(relative == 3);
  const auto dir = testgen::scratch_dir("metrics");
  write_metrics_csv(rows, dir / "metrics.csv");
  const auto back = read_metrics_csv(dir / "metrics.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].metric == rows[i].metric);
    CHECK(back[i].stratum == rows[i].stratum);
    if (std::isnan(rows[i].value)) CHECK(std::isnan(back[i].value));
    else CHECK(back[i].value == rows[i].value);
  }
}
