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

#ifndef AGZO_PERTURB_HPP_
#define AGZO_PERTURB_HPP_

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/matrix.hpp"
#include "agzo/model.hpp"
#include "agzo/rng.hpp"

namespace agzo {

enum class PerturbKind {
  kDense,     // full-shape Gaussian
  kLowRank,   // R A^T against a frozen orthonormal basis
  kGaussPair  // U V^T with both factors Gaussian
};

// Everything needed to rebuild a perturbation bit-exactly: a seed and the
// structural metadata. The basis (when present) is the only owned payload;
// it is shared, so holding many records costs its bytes once.
struct PerturbationRecord {
  PerturbKind kind = PerturbKind::kDense;
  std::size_t layer = 0;  // index into ModelParams::layers
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;  // factor width, 0 for dense
  SeedKey seed{0, 0};
  std::shared_ptr<const Matrix> basis;  // cols x rank, kLowRank only
  double update_scale = 1.0;            // multiplies eta*g in the update
};

inline PerturbationRecord sample_dense(std::size_t layer, std::size_t rows,
                                       std::size_t cols, SeedKey seed) {
  if (rows == 0 || cols == 0) {
    throw dimension_error("sample_dense: empty shape");
  }
  PerturbationRecord rec;
  rec.kind = PerturbKind::kDense;
  rec.layer = layer;
  rec.rows = rows;
  rec.cols = cols;
  rec.seed = seed;
  return rec;
}

inline PerturbationRecord sample_low_rank(std::size_t layer, std::size_t rows,
                                          std::shared_ptr<const Matrix> basis,
                                          SeedKey seed) {
  if (!basis || basis->empty()) {
    throw dimension_error("sample_low_rank: missing basis");
  }
  const std::size_t cols = basis->rows(), rank = basis->cols();
  if (rank > std::min(rows, cols)) {
    throw dimension_error("sample_low_rank: basis wider than min(d_out,d_in)");
  }
  PerturbationRecord rec;
  rec.kind = PerturbKind::kLowRank;
  rec.layer = layer;
  rec.rows = rows;
  rec.cols = cols;
  rec.rank = rank;
  rec.seed = seed;
  rec.basis = std::move(basis);
  return rec;
}

inline PerturbationRecord sample_gauss_pair(std::size_t layer,
                                            std::size_t rows, std::size_t cols,
                                            std::size_t rank, SeedKey seed) {
  if (rows == 0 || cols == 0 || rank == 0) {
    throw dimension_error("sample_gauss_pair: empty shape");
  }
  if (rank > std::min(rows, cols)) {
    throw dimension_error("sample_gauss_pair: rank exceeds min(d_out,d_in)");
  }
  PerturbationRecord rec;
  rec.kind = PerturbKind::kGaussPair;
  rec.layer = layer;
  rec.rows = rows;
  rec.cols = cols;
  rec.rank = rank;
  rec.seed = seed;
  return rec;
}

// Linear layers with a live basis get the low-rank kind; everything else
// (biases, degenerate subspaces) falls back to dense.
inline PerturbationRecord sample_perturbation(
    const ModelParams& params, std::size_t layer,
    std::shared_ptr<const Matrix> basis, SeedKey seed) {
  if (layer >= params.layers.size()) {
    throw dimension_error("sample_perturbation: layer out of range");
  }
  const Layer& l = params.layers[layer];
  if (l.kind == LayerKind::kLinear && basis) {
    return sample_low_rank(layer, l.w.rows(), std::move(basis), seed);
  }
  return sample_dense(layer, l.w.rows(), l.w.cols(), seed);
}

// Materialize Delta. Bit-identical across calls for the same record.
inline Matrix regenerate(const PerturbationRecord& rec) {
  switch (rec.kind) {
    case PerturbKind::kDense:
      return gauss_matrix(fork(rec.seed, kTagPerturb), rec.rows, rec.cols);
    case PerturbKind::kLowRank: {
      const Matrix r =
          gauss_matrix(fork(rec.seed, kTagPerturb), rec.rows, rec.rank);
      return multiply_bt(r, *rec.basis);
    }
    case PerturbKind::kGaussPair: {
      const Matrix u =
          gauss_matrix(fork(rec.seed, kTagFactorU), rec.rows, rec.rank);
      const Matrix v =
          gauss_matrix(fork(rec.seed, kTagFactorV), rec.cols, rec.rank);
      return multiply_bt(u, v);
    }
  }
  throw invariant_error("regenerate: unknown perturbation kind");
}

namespace perturb_detail {

// W += coeff * Delta without materializing Delta. Accumulation order matches
// regenerate() + multiply_bt exactly, so the streamed path and the
// materialized path add bit-identical increments.
inline void add_record(Matrix& w, const PerturbationRecord& rec,
                       double coeff) {
  switch (rec.kind) {
    case PerturbKind::kDense: {
      NormalStream ns(fork(rec.seed, kTagPerturb));
      double* p = w.data();
      for (std::size_t i = 0, n = w.size(); i < n; ++i) {
        p[i] += coeff * ns.at(i);
      }
      return;
    }
    case PerturbKind::kLowRank: {
      const Matrix r =
          gauss_matrix(fork(rec.seed, kTagPerturb), rec.rows, rec.rank);
      const Matrix& a = *rec.basis;
      for (std::size_t i = 0; i < rec.rows; ++i)
        for (std::size_t j = 0; j < rec.cols; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < rec.rank; ++k) acc += r(i, k) * a(j, k);
          w(i, j) += coeff * acc;
        }
      return;
    }
    case PerturbKind::kGaussPair: {
      const Matrix u =
          gauss_matrix(fork(rec.seed, kTagFactorU), rec.rows, rec.rank);
      const Matrix v =
          gauss_matrix(fork(rec.seed, kTagFactorV), rec.cols, rec.rank);
      for (std::size_t i = 0; i < rec.rows; ++i)
        for (std::size_t j = 0; j < rec.cols; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < rec.rank; ++k) acc += u(i, k) * v(j, k);
          w(i, j) += coeff * acc;
        }
      return;
    }
  }
  throw invariant_error("add_record: unknown perturbation kind");
}

inline void validate(const ModelParams& params,
                     const std::vector<PerturbationRecord>& records) {
  if (records.size() != params.layers.size()) {
    throw dimension_error("perturbation: need one record per layer, got " +
                          std::to_string(records.size()) + " for " +
                          std::to_string(params.layers.size()));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const Matrix& w = params.layers[i].w;
    if (rec.layer != i || rec.rows != w.rows() || rec.cols != w.cols()) {
      throw dimension_error("perturbation: record " + std::to_string(i) +
                            " does not match its layer shape");
    }
    if (rec.kind == PerturbKind::kLowRank &&
        (!rec.basis || rec.basis->rows() != rec.cols ||
         rec.basis->cols() != rec.rank || rec.rank == 0)) {
      throw dimension_error("perturbation: malformed low-rank record " +
                            std::to_string(i));
    }
    if (rec.kind == PerturbKind::kGaussPair && rec.rank == 0) {
      throw dimension_error("perturbation: malformed factor-pair record " +
                            std::to_string(i));
    }
  }
}

}  // namespace perturb_detail

// W_l += coeff * Delta_l for every layer. Validates everything before
// touching any weight.
inline void add_scaled(ModelParams& params,
                       const std::vector<PerturbationRecord>& records,
                       double coeff) {
  perturb_detail::validate(params, records);
  for (const auto& rec : records) {
    perturb_detail::add_record(params.layers[rec.layer].w, rec, coeff);
  }
}

inline void apply_perturbation(ModelParams& params,
                               const std::vector<PerturbationRecord>& records,
                               double mu) {
  if (!(mu > 0.0)) {
    throw config_error("apply_perturbation: mu must be positive");
  }
  add_scaled(params, records, mu);
}

// Fused restore and update: W_l -= restore_mu * Delta_l + eta * g *
// update_scale_l * Delta_l in a single regeneration pass. Callers that moved
// to W - mu*Delta (central difference) pass restore_mu = -mu.
inline void restore_and_update(ModelParams& params,
                               const std::vector<PerturbationRecord>& records,
                               double restore_mu, double eta, double g) {
  perturb_detail::validate(params, records);
  for (const auto& rec : records) {
    const double coeff = -(restore_mu + eta * g * rec.update_scale);
    perturb_detail::add_record(params.layers[rec.layer].w, rec, coeff);
  }
}

}  // namespace agzo

#endif  // AGZO_PERTURB_HPP_
