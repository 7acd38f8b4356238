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

#ifndef AGZO_SUBSPACE_HPP_
#define AGZO_SUBSPACE_HPP_

#include <cstddef>
#include <optional>
#include <utility>

#include "agzo/errors.hpp"
#include "agzo/linalg.hpp"
#include "agzo/matrix.hpp"
#include "agzo/rng.hpp"

namespace agzo {

// Orthonormal basis for the dominant range of an activation matrix.
struct ActivationBasis {
  Matrix a;                    // d_in x r', orthonormal columns
  std::size_t requested_rank;  // the r that was asked for
  bool width_reduced;          // r' < r (thin input or rank-deficient H)
};

// Randomized power iteration on H (d_in x m): Omega ~ N(0,1)^{m x r'},
// Y = H Omega, then K rounds of Q = qr(Y), Y = H (H^T Q), and one final QR.
// The input is consumed so its bytes leave the ledger before the last
// factorization. Returns nullopt when H is numerically zero; callers fall
// back to a dense perturbation in that case.
inline std::optional<ActivationBasis> subspace_extract(Matrix h, std::size_t r,
                                                       std::size_t k,
                                                       SeedKey key) {
  if (r < 1) throw domain_error("subspace_extract: rank must be >= 1");
  if (h.empty()) throw dimension_error("subspace_extract: empty input");

  if (frob(h) < 1e-12) {
    h.release();
    return std::nullopt;
  }

  const std::size_t d_in = h.rows(), m = h.cols();
  std::size_t width = std::min({r, d_in, m});

  Matrix y;
  {
    const Matrix omega =
        gauss_matrix(fork(key, kTagSubspace), m, width);
    y = multiply(h, omega);
  }

  const auto orthonormalize = [&](Matrix& basis) {
    auto f = linalg_detail::qr_householder(basis);
    if (f.rank == 0) return false;
    basis = (f.rank < basis.cols()) ? take_cols(f.q, f.rank)
                                    : std::move(f.q);
    return true;
  };

  for (std::size_t it = 0; it < k; ++it) {
    if (!orthonormalize(y)) {
      h.release();
      return std::nullopt;
    }
    Matrix t = multiply_at(h, y);  // H^T Q, m x width'
    y = multiply(h, t);
  }

  h.release();
  if (!orthonormalize(y)) return std::nullopt;
  const bool reduced = y.cols() < r;
  return ActivationBasis{std::move(y), r, reduced};
}

}  // namespace agzo

#endif  // AGZO_SUBSPACE_HPP_
