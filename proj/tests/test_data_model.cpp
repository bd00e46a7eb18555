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
#include <fstream>

#include "doctest.h"
#include "generators.hpp"
#include "pcplod/error.hpp"

using namespace pcplod;

namespace {

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& text) {
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Sample sd over Observed entries of column j, computed directly.
double observed_sd(const MaskedMatrix& x, Index j) {
  double sum = 0.0;
  int n = 0;
  for (Index i = 0; i < x.rows(); ++i)
    if (x.status(i, j) == EntryStatus::Observed) sum += x.value(i, j), ++n;
  const double mean = sum / n;
  double ss = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    if (x.status(i, j) == EntryStatus::Observed)
      ss += (x.value(i, j) - mean) * (x.value(i, j) - mean);
  return std::sqrt(ss / (n - 1));
}

}  // namespace

TEST_CASE("read_matrix_csv parses a plain all-observed file") {
  const auto dir = testgen::scratch_dir("dm_plain");
  const auto x = read_matrix_csv(write_text(dir, "m.csv", "a,b\n1.0,2.0\n3.0,4.0\n"));
  REQUIRE(x.rows() == 2);
  REQUIRE(x.cols() == 2);
  CHECK(x.all_observed());
  CHECK(x.value(0, 0) == 1.0);
  CHECK(x.value(0, 1) == 2.0);
  CHECK(x.value(1, 0) == 3.0);
  CHECK(x.value(1, 1) == 4.0);
  CHECK(x.column_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("<LOD token takes the column LOD") {
  const auto dir = testgen::scratch_dir("dm_lod");
  const auto x = read_matrix_csv(write_text(dir, "m.csv", "a,b\n#lod,0.5,\n<LOD,2\n1,3\n"));
  CHECK(x.status(0, 0) == EntryStatus::BelowLod);
  CHECK(x.delta(0, 0) == 0.5);
  CHECK(x.status(1, 0) == EntryStatus::Observed);
  CHECK(std::isnan(x.value(0, 0)));
}

TEST_CASE("empty cell without LOD metadata is Missing") {
  const auto dir = testgen::scratch_dir("dm_missing");
  const auto x = read_matrix_csv(write_text(dir, "m.csv", "a,b\n,2\n1,NA\n"));
  CHECK(x.status(0, 0) == EntryStatus::Missing);
  CHECK(x.status(1, 1) == EntryStatus::Missing);
  CHECK(x.status(0, 1) == EntryStatus::Observed);
}

TEST_CASE("empty cell in a column with an LOD follows the schema option") {
  const auto dir = testgen::scratch_dir("dm_empty_lod");
  const auto path = write_text(dir, "m.csv", "a,b\n#lod,0.25,\n,1\n1,2\n");
  CHECK(read_matrix_csv(path).status(0, 0) == EntryStatus::Missing);
  MatrixSchema schema;
  schema.empty_is_below_lod = true;
  const auto x = read_matrix_csv(path, schema);
  CHECK(x.status(0, 0) == EntryStatus::BelowLod);
  CHECK(x.delta(0, 0) == 0.25);
}

TEST_CASE("malformed numeric cell reports its location") {
  const auto dir = testgen::scratch_dir("dm_parse");
  const auto path = write_text(dir, "m.csv", "a,b\n1,2\n3,4x\n");
  try {
    read_matrix_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
    CHECK(e.exit_code() == ExitCode::Io);
  }
}

TEST_CASE("below-LOD cell without a positive LOD is a schema error") {
  const auto dir = testgen::scratch_dir("dm_schema");
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "a.csv", "a\n<LOD\n")), SchemaError);
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "b.csv", "a\n#lod,0\n<LOD\n")), SchemaError);
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "c.csv", "a\n#lod,-1\n<LOD\n")), SchemaError);
}

TEST_CASE("negative observed value is a domain error") {
  const auto dir = testgen::scratch_dir("dm_negative");
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "m.csv", "a\n1\n-0.5\n")), DomainError);
}

TEST_CASE("header mismatch against the schema is a schema error") {
  const auto dir = testgen::scratch_dir("dm_header");
  MatrixSchema schema;
  schema.expected_columns = {"a", "c"};
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "m.csv", "a,b\n1,2\n"), schema), SchemaError);
  MatrixSchema lod_required;
  lod_required.require_lod_row = true;
  CHECK_THROWS_AS(read_matrix_csv(write_text(dir, "n.csv", "a,b\n1,2\n"), lod_required),
                  SchemaError);
}

TEST_CASE("MaskedMatrix rejects a BelowLod entry without a positive delta") {
  StatusGrid s(1, 1, EntryStatus::BelowLod);
  CHECK_THROWS_AS(MaskedMatrix(Matrix::Zero(1, 1), s, Matrix::Zero(1, 1)), SchemaError);
}

TEST_CASE("standardize_columns gives unit sample sd") {
  const auto x = MaskedMatrix::observed((Matrix(2, 1) << 2.0, 4.0).finished());
  const auto z = standardize_columns(x);
  CHECK(observed_sd(z, 0) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(z.scale());
  CHECK((*z.scale())(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // No centering: the ratio of the two values is preserved.
  CHECK(z.value(1, 0) / z.value(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("standardize_columns leaves a unit-sd column unchanged") {
  // {0, 1, 2} has sample sd 1.
  const auto x = MaskedMatrix::observed((Matrix(3, 1) << 0.0, 1.0, 2.0).finished());
  const auto z = standardize_columns(x);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(z.value(i, 0) - x.value(i, 0)) <= 1e-12);
}

TEST_CASE("standardize_columns divides delta by the column factor") {
  // Observed {1, 3, 5} has sample sd 2.
  Matrix v(4, 1);
  v << 1.0, 3.0, 5.0, 0.0;
  Matrix d = Matrix::Zero(4, 1);
  d(3, 0) = 1.0;
  StatusGrid s(4, 1);
  s(3, 0) = EntryStatus::BelowLod;
  const auto z = standardize_columns(MaskedMatrix(v, s, d));
  CHECK(z.delta(3, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z.status(3, 0) == EntryStatus::BelowLod);
}

TEST_CASE("standardize_columns names a degenerate column") {
  Matrix v(3, 2);
  v << 1, 2, 1, 3, 1, 4;
  const auto x = MaskedMatrix::observed(v, {"flat", "ok"});
  try {
    standardize_columns(x);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
  }
  StatusGrid s(3, 2);
  s(0, 1) = s(1, 1) = EntryStatus::Missing;
  CHECK_THROWS_AS(standardize_columns(MaskedMatrix(v + Matrix::Constant(3, 2, 0.0), s,
                                                   Matrix::Zero(3, 2), {"flat2", "one"})),
                  DomainError);
}

TEST_CASE("write_matrix_csv number formatting") {
  CHECK(format_double(0.0) == "0");
  const std::string third = format_double(1.0 / 3.0);
  int digits = 0;
  for (char c : third) digits += (c >= '0' && c <= '9');
  CHECK(digits - 1 >= 17);  // leading zero is not significant
  CHECK(std::stod(third) == 1.0 / 3.0);

  const auto dir = testgen::scratch_dir("dm_zero");
  write_matrix_csv(Matrix::Zero(1, 2), dir / "z.csv", {"a", "b"});
  CHECK(read_text(dir / "z.csv") == "a,b\n0,0\n");
}

TEST_CASE("write then read reproduces a matrix") {
  testgen::Rng rng(5);
  const Matrix m = testgen::uniform_matrix(7, 3, rng, 0.0, 1e6);
  const auto dir = testgen::scratch_dir("dm_roundtrip");
  write_matrix_csv(m, dir / "m.csv");
  const Matrix back = read_numeric_csv(dir / "m.csv");
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 7; ++i)
      CHECK(std::abs(back(i, j) - m(i, j)) <= 1e-15 * std::abs(m(i, j)));
}

TEST_CASE("property: masked round trip in both file forms") {
  const auto dir = testgen::scratch_dir("dm_prop_roundtrip");
  testgen::Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Index p = 1 + static_cast<Index>(rng.below(6));
    const auto x = testgen::random_masked(n, p, rng, 0.3, 0.2);
    const auto path = dir / ("t" + std::to_string(trial) + ".csv");
    write_masked_csv(x, path);
    const auto back = read_matrix_csv(path);
    CHECK(back.statuses() == x.statuses());
    for (Index j = 0; j < p; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (x.status(i, j) == EntryStatus::Observed)
          CHECK(std::abs(back.value(i, j) - x.value(i, j)) <= 1e-15 * std::abs(x.value(i, j)));
        if (x.status(i, j) == EntryStatus::BelowLod) CHECK(back.delta(i, j) == x.delta(i, j));
      }
    }
  }

  // Single-file form needs one LOD per column.
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(10));
    const Index p = 1 + static_cast<Index>(rng.below(5));
    auto x = testgen::random_masked(n, p, rng, 0.3, 0.2);
    Matrix d = x.deltas();
    for (Index j = 0; j < p; ++j) d.col(j).setConstant(d(0, j));
    Matrix v = x.values();
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i)
        if (x.status(i, j) != EntryStatus::Observed) v(i, j) = 0.0;
    x = MaskedMatrix(v, x.statuses(), d);
    const auto path = dir / ("s" + std::to_string(trial) + ".csv");
    write_lod_csv(x, path);
    const auto back = read_matrix_csv(path);
    CHECK(back.statuses() == x.statuses());
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < n; ++i) {
        if (x.status(i, j) == EntryStatus::Observed) CHECK(back.value(i, j) == x.value(i, j));
        if (x.status(i, j) == EntryStatus::BelowLod) CHECK(back.delta(i, j) == x.delta(i, j));
      }
  }
}

TEST_CASE("property: standardize_columns is idempotent") {
  testgen::Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 5 + static_cast<Index>(rng.below(20));
    const Index p = 1 + static_cast<Index>(rng.below(5));
    const auto x = testgen::random_masked(n, p, rng, 0.1, 0.1);
    bool ok = true;
    for (Index j = 0; j < p; ++j) {
      int obs = 0;
      for (Index i = 0; i < n; ++i) obs += x.status(i, j) == EntryStatus::Observed;
      ok = ok && obs >= 2;
    }
    if (!ok) continue;
    const auto once = standardize_columns(x);
    const auto twice = standardize_columns(once);
    for (Index j = 0; j < p; ++j) {
      CHECK(observed_sd(once, j) == doctest::Approx(1.0).epsilon(1e-12));
      for (Index i = 0; i < n; ++i) {
        if (x.status(i, j) == EntryStatus::Observed)
          CHECK(std::abs(twice.value(i, j) - once.value(i, j)) <= 1e-12);
        CHECK(std::abs(twice.delta(i, j) - once.delta(i, j)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("property: Missing and BelowLod values are never data") {
  testgen::Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testgen::random_masked(8, 4, rng, 0.3, 0.3);
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 8; ++i)
        if (x.status(i, j) != EntryStatus::Observed) CHECK(std::isnan(x.value(i, j)));
    const Matrix w = x.warm_start();
    CHECK(w.allFinite());
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 8; ++i) {
        if (x.status(i, j) == EntryStatus::Missing) CHECK(w(i, j) == 0.0);
        if (x.status(i, j) == EntryStatus::BelowLod) CHECK(w(i, j) == x.delta(i, j) / 2.0);
      }
  }
}

TEST_CASE("status tokens") {
  CHECK(status_token(EntryStatus::Observed) == 'O');
  CHECK(status_token(EntryStatus::BelowLod) == 'L');
  CHECK(status_token(EntryStatus::Missing) == 'M');
  CHECK(parse_status_token("L") == EntryStatus::BelowLod);
  CHECK_THROWS(parse_status_token("X"));
}
