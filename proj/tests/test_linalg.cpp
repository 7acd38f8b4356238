// Copyright 2026 The agzo-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "agzo/linalg.hpp"
#include "agzo/matrix.hpp"

namespace {

using agzo::Matrix;
using agzo::SeedKey;

double ortho_defect(const Matrix& q) {
  const Matrix g = multiply_at(q, q);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

TEST_CASE("qr hand case: orthogonal columns") {
  // Gram-Schmidt by hand: col0 = (3,4,0)/5, col1 = (0,0,5)/5.
  const Matrix m{{3, 0}, {4, 0}, {0, 5}};
  const auto f = agzo::qr_orthonormal(m);
  CHECK(f.q(0, 0) == Catch::Approx(0.6).margin(1e-14));
  CHECK(f.q(1, 0) == Catch::Approx(0.8).margin(1e-14));
  CHECK(f.q(2, 0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(f.q(2, 1) == Catch::Approx(1.0).margin(1e-14));
  CHECK(f.r(0, 0) == Catch::Approx(5.0).margin(1e-14));
  CHECK(f.r(1, 1) == Catch::Approx(5.0).margin(1e-14));
  CHECK(f.r(0, 1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("qr flags the offending column on rank deficiency") {
  const Matrix m{{3, 0}, {4, 0}, {0, 0}};
  try {
    agzo::qr_orthonormal(m);
    FAIL("expected rank_error");
  } catch (const agzo::rank_error& e) {
    CHECK(e.column() == 1);
  }

  // The internal factorization still yields the leading column.
  const auto f = agzo::linalg_detail::qr_householder(m);
  CHECK(f.rank == 1);
  CHECK(f.q(0, 0) == Catch::Approx(0.6).margin(1e-14));
  CHECK(f.q(1, 0) == Catch::Approx(0.8).margin(1e-14));
  CHECK(f.r(0, 0) == Catch::Approx(5.0).margin(1e-14));
}

TEST_CASE("qr properties on random input") {
  const Matrix m = gauss_matrix(SeedKey{11, 0}, 16, 8);
  const auto f = agzo::qr_orthonormal(m);
  CHECK(ortho_defect(f.q) < 1e-12);

  // Q R == M
  const Matrix qr = multiply(f.q, f.r);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(qr(i, j) - m(i, j)));
  CHECK(worst < 1e-12);

  // R upper triangular with nonnegative diagonal.
  for (std::size_t i = 0; i < f.r.rows(); ++i) {
    CHECK(f.r(i, i) >= 0.0);
    for (std::size_t j = 0; j < i; ++j) CHECK(f.r(i, j) == 0.0);
  }

  CHECK_THROWS_AS(agzo::qr_orthonormal(Matrix(4, 6)), agzo::dimension_error);
}

TEST_CASE("svd hand cases") {
  const Matrix d{{3, 0}, {0, 1}};
  const auto s1 = agzo::svd_full(d);
  REQUIRE(s1.sigma.size() == 2);
  CHECK(s1.sigma[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(s1.sigma[1] == Catch::Approx(1.0).margin(1e-12));

  // Symmetric [[2,1],[1,2]] has eigenvalues 3 and 1.
  const Matrix sym{{2, 1}, {1, 2}};
  const auto s2 = agzo::svd_full(sym);
  CHECK(s2.sigma[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(s2.sigma[1] == Catch::Approx(1.0).margin(1e-12));

  // Rank-1 u v^T with ||u|| = 2, ||v|| = 1: sigma = (2, 0). U must still come
  // back orthonormal (completion column).
  const Matrix u{{1.2}, {1.6}};
  const Matrix v{{0.6}, {0.8}};
  const auto s3 = agzo::svd_full(multiply_bt(u, v));
  CHECK(s3.sigma[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(s3.sigma[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(ortho_defect(s3.u) < 1e-10);
  CHECK(ortho_defect(s3.v) < 1e-10);
}

TEST_CASE("svd reconstruction and spectral identities on random input") {
  for (auto dims : std::vector<std::pair<std::size_t, std::size_t>>{
           {16, 16}, {13, 8}, {8, 13}}) {
    const Matrix m =
        gauss_matrix(SeedKey{99, dims.first * 100 + dims.second}, dims.first,
                     dims.second);
    const auto s = agzo::svd_full(m);
    const std::size_t p = std::min(dims.first, dims.second);
    REQUIRE(s.sigma.size() == p);

    CHECK(ortho_defect(s.u) < 1e-10);
    CHECK(ortho_defect(s.v) < 1e-10);
    for (std::size_t i = 1; i < p; ++i) CHECK(s.sigma[i - 1] >= s.sigma[i]);

    // M == U diag(sigma) V^T, relative Frobenius.
    Matrix us = s.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
      for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s.sigma[j];
    const Matrix recon = multiply_bt(us, s.v);
    Matrix diff = recon;
    axpy(diff, -1.0, m);
    CHECK(agzo::frob(diff) / agzo::frob(m) < 1e-9);

    // sum sigma_i^2 == ||M||_F^2 (trace of M^T M).
    double ss = 0.0;
    for (double x : s.sigma) ss += x * x;
    CHECK(ss == Catch::Approx(agzo::frob(m) * agzo::frob(m)).epsilon(1e-8));
  }
}

TEST_CASE("numerical rank and desk-scale guard") {
  CHECK(agzo::numerical_rank({3.0, 1.0, 1e-15}) == 2);
  CHECK(agzo::numerical_rank({3.0, 1.0, 0.5}) == 3);
  CHECK(agzo::numerical_rank({0.0, 0.0}) == 0);
  CHECK(agzo::numerical_rank({}) == 0);

  CHECK_THROWS_AS(agzo::svd_full(Matrix(2049, 2)), agzo::dimension_error);
  CHECK_THROWS_AS(agzo::qr_orthonormal(Matrix(2049, 2)),
                  agzo::dimension_error);
}

}  // namespace
