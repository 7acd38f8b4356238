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

#ifndef AGZO_LINALG_HPP_
#define AGZO_LINALG_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/matrix.hpp"

namespace agzo {

// Largest dimension any factorization here will accept. Everything in this
// lab is desk scale; hitting this limit means a config is wrong, not that a
// bigger kernel is needed.
inline constexpr std::size_t kMaxFactorDim = 2048;

struct QrResult {
  Matrix q;  // thin, orthonormal columns
  Matrix r;  // upper triangular, nonnegative diagonal
};

namespace linalg_detail {

struct QrRank {
  Matrix q;
  Matrix r;
  std::size_t rank;        // index of first deficient column, or cols
  double min_diag = 0.0;
  double max_diag = 0.0;
};

// Householder QR with explicit thin Q (Trefethen & Bau, Algorithms 10.1 and
// 10.3 adapted to accumulate Q directly). Signs are fixed afterwards so the
// diagonal of R is nonnegative, which makes the factorization unique for
// full-rank input and keeps downstream draws deterministic.
inline QrRank qr_householder(const Matrix& m, double rank_rtol = 1e-12) {
  const std::size_t n = m.rows(), k = m.cols();
  if (n < k) throw dimension_error("qr: expected rows >= cols");
  if (n > kMaxFactorDim) throw dimension_error("qr: desk-scale limit exceeded");

  Matrix a(m);
  std::vector<double> vs(n * k, 0.0);  // reflector j lives in vs[j*n + j .. ]

  for (std::size_t j = 0; j < k; ++j) {
    double* v = vs.data() + j * n;
    double normx = 0.0;
    for (std::size_t i = j; i < n; ++i) {
      v[i] = a(i, j);
      normx += v[i] * v[i];
    }
    normx = std::sqrt(normx);
    if (normx == 0.0) continue;  // zero column: no reflection
    v[j] += (v[j] >= 0.0 ? normx : -normx);
    double normv = 0.0;
    for (std::size_t i = j; i < n; ++i) normv += v[i] * v[i];
    normv = std::sqrt(normv);
    if (normv == 0.0) continue;
    for (std::size_t i = j; i < n; ++i) v[i] /= normv;
    for (std::size_t c = j; c < k; ++c) {
      double w = 0.0;
      for (std::size_t i = j; i < n; ++i) w += v[i] * a(i, c);
      w *= 2.0;
      for (std::size_t i = j; i < n; ++i) a(i, c) -= w * v[i];
    }
  }

  QrRank out{Matrix(n, k), Matrix(k, k), k};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) out.r(i, j) = a(i, j);
  a.release();

  // Q = H_0 ... H_{k-1} applied to the first k columns of the identity.
  for (std::size_t j = 0; j < k; ++j) out.q(j, j) = 1.0;
  for (std::size_t j = k; j-- > 0;) {
    const double* v = vs.data() + j * n;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t c = 0; c < k; ++c) {
      double w = 0.0;
      for (std::size_t i = j; i < n; ++i) w += v[i] * out.q(i, c);
      w *= 2.0;
      for (std::size_t i = j; i < n; ++i) out.q(i, c) -= w * v[i];
    }
  }

  for (std::size_t j = 0; j < k; ++j) {
    if (out.r(j, j) < 0.0) {
      for (std::size_t c = j; c < k; ++c) out.r(j, c) = -out.r(j, c);
      for (std::size_t i = 0; i < n; ++i) out.q(i, j) = -out.q(i, j);
    }
  }

  out.max_diag = 0.0;
  out.min_diag = out.r(0, 0);
  for (std::size_t j = 0; j < k; ++j) {
    out.max_diag = std::max(out.max_diag, out.r(j, j));
    out.min_diag = std::min(out.min_diag, out.r(j, j));
  }
  out.rank = k;
  for (std::size_t j = 0; j < k; ++j) {
    if (out.max_diag == 0.0 || out.r(j, j) < rank_rtol * out.max_diag) {
      out.rank = j;
      break;
    }
  }
  return out;
}

}  // namespace linalg_detail

// Thin QR. Throws rank_error (with the offending column) if the smallest
// diagonal of R falls below 1e-12 times the largest.
inline QrResult qr_orthonormal(const Matrix& m) {
  auto f = linalg_detail::qr_householder(m);
  if (f.rank < m.cols()) {
    throw rank_error("qr_orthonormal: rank-deficient at column " +
                         std::to_string(f.rank),
                     f.rank);
  }
  return QrResult{std::move(f.q), std::move(f.r)};
}

struct Svd {
  Matrix u;                   // rows x p, orthonormal columns
  std::vector<double> sigma;  // p = min(rows, cols), descending
  Matrix v;                   // cols x p, orthonormal columns
};

namespace linalg_detail {

// One-sided Jacobi (Hestenes) on a tall matrix: rotate column pairs of A
// until all are mutually orthogonal, then read off sigma as column norms.
// Slow but simple and accurate at desk scale.
inline Svd jacobi_svd_tall(const Matrix& m) {
  const std::size_t n = m.rows(), p = m.cols();
  Matrix a(m);
  Matrix v = identity(p);

  constexpr double kOrthTol = 1e-15;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t c1 = 0; c1 + 1 < p; ++c1) {
      for (std::size_t c2 = c1 + 1; c2 < p; ++c2) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = a(i, c1), y = a(i, c2);
          alpha += x * x;
          beta += y * y;
          gamma += x * y;
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kOrthTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = a(i, c1), y = a(i, c2);
          a(i, c1) = c * x - s * y;
          a(i, c2) = s * x + c * y;
        }
        for (std::size_t i = 0; i < p; ++i) {
          const double x = v(i, c1), y = v(i, c2);
          v(i, c1) = c * x - s * y;
          v(i, c2) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a(i, j) * a(i, j);
    sigma[j] = std::sqrt(acc);
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return sigma[x] > sigma[y];
                   });

  Svd out{Matrix(n, p), std::vector<double>(p), Matrix(p, p)};
  const double smax = sigma[order[0]];
  std::size_t filled = 0;
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = sigma[src];
    for (std::size_t i = 0; i < p; ++i) out.v(i, j) = v(i, src);
    if (sigma[src] > smax * 1e-300 && sigma[src] > 0.0) {
      for (std::size_t i = 0; i < n; ++i) out.u(i, j) = a(i, src) / sigma[src];
      filled = j + 1;
    }
  }

  // Zero singular values leave holes in U; fill them with an orthonormal
  // completion so U always has orthonormal columns.
  for (std::size_t j = filled; j < p; ++j) {
    for (std::size_t cand = 0; cand < n; ++cand) {
      for (std::size_t i = 0; i < n; ++i) out.u(i, j) = (i == cand) ? 1.0 : 0.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < j; ++c) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += out.u(i, c) * out.u(i, j);
          for (std::size_t i = 0; i < n; ++i) out.u(i, j) -= dot * out.u(i, c);
        }
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < n; ++i) nrm += out.u(i, j) * out.u(i, j);
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < n; ++i) out.u(i, j) /= nrm;
        break;
      }
    }
  }
  return out;
}

}  // namespace linalg_detail

// Thin SVD, singular values descending. Exact shapes: U rows x p, V cols x p
// with p = min(rows, cols); M = U diag(sigma) V^T.
inline Svd svd_full(const Matrix& m) {
  if (std::max(m.rows(), m.cols()) > kMaxFactorDim) {
    throw dimension_error("svd_full: desk-scale limit exceeded");
  }
  if (m.rows() >= m.cols()) return linalg_detail::jacobi_svd_tall(m);
  Svd s = linalg_detail::jacobi_svd_tall(transpose(m));
  std::swap(s.u, s.v);
  return s;
}

inline std::size_t numerical_rank(const std::vector<double>& sigma,
                                  double rtol = 1e-12) {
  if (sigma.empty() || sigma[0] <= 0.0) return 0;
  std::size_t r = 0;
  for (double s : sigma)
    if (s > rtol * sigma[0]) ++r;
  return r;
}

}  // namespace agzo

#endif  // AGZO_LINALG_HPP_
