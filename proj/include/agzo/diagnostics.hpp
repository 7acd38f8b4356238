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

#ifndef AGZO_DIAGNOSTICS_HPP_
#define AGZO_DIAGNOSTICS_HPP_

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/linalg.hpp"
#include "agzo/matrix.hpp"
#include "agzo/model.hpp"
#include "agzo/rng.hpp"

namespace agzo {

// beta_D: expected |first coordinate| of a uniform point on S^{D-1}.
// Log-gamma differences keep this finite far beyond any dimension used here.
inline double beta(std::int64_t d) {
  if (d < 1) throw domain_error("beta: D must be >= 1");
  const double half = 0.5 * static_cast<double>(d);
  return std::exp(std::lgamma(half) - std::lgamma(half + 0.5)) /
         std::sqrt(M_PI);
}

struct BetaBounds {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool ok = false;
};

// Checks sqrt(2/(pi D)) <= beta_D <= sqrt(2/(pi (D-1))) and the strict
// decrease beta_D < beta_{D-1}.
inline BetaBounds beta_bounds_check(std::int64_t d) {
  if (d < 2) throw domain_error("beta_bounds_check: D must be >= 2");
  BetaBounds b;
  b.value = beta(d);
  b.lower = std::sqrt(2.0 / (M_PI * static_cast<double>(d)));
  b.upper = std::sqrt(2.0 / (M_PI * static_cast<double>(d - 1)));
  b.ok = b.lower <= b.value && b.value <= b.upper && b.value < beta(d - 1);
  return b;
}

namespace diag_detail {

inline double ortho_defect(const Matrix& a) {
  Matrix g = multiply_at(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

inline void require_orthonormal(const Matrix& a) {
  if (ortho_defect(a) > 1e-8) {
    throw invariant_error("basis columns are not orthonormal");
  }
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("AGZO_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs fn(chunk_index) for every chunk, fanning out over workers. Chunk
// boundaries are fixed, so any per-chunk partial results can be folded in
// chunk order afterwards for worker-count-independent sums.
template <typename Fn>
inline void for_each_chunk(std::size_t n_chunks, const Fn& fn) {
  const std::size_t workers = std::min(worker_count(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next.fetch_add(1); c < n_chunks;
           c = next.fetch_add(1)) {
        fn(c);
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline constexpr std::size_t kMcChunk = 4096;

}  // namespace diag_detail

// Analytic expected cosine of the noiseless subspace estimator:
// beta_{d_out * r} * ||G A||_F / ||G||_F.
inline double expected_cosine_agzo(const Matrix& g, const Matrix& a) {
  const double gnorm = frob(g);
  if (gnorm == 0.0) throw domain_error("expected_cosine: zero gradient");
  if (a.rows() != g.cols()) {
    throw dimension_error("expected_cosine: basis does not match gradient");
  }
  diag_detail::require_orthonormal(a);
  const auto d = static_cast<std::int64_t>(g.rows() * a.cols());
  return beta(d) * frob(multiply(g, a)) / gnorm;
}

// Dense counterpart: beta of the full parameter count, independent of G's
// values.
inline double expected_cosine_mezo(const Matrix& g) {
  return beta(static_cast<std::int64_t>(g.rows() * g.cols()));
}

struct CosineReport {
  double analytic_expectation = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  std::size_t n_trials = 0;
  double subspace_energy_ratio = 1.0;  // ||GA||_F / ||G||_F, 1 for dense
  std::size_t d_out = 0;
  std::size_t d_in = 0;
  std::size_t r = 0;  // basis width, d_in for the dense case
};

// Monte Carlo over the noiseless one-trial cosine |<R, GA>| / (||R|| ||G||)
// (dense: A = I). Trials are partitioned into fixed chunks and partial sums
// folded in chunk order, so the result is bitwise independent of
// AGZO_LAB_THREADS.
inline CosineReport mc_cosine(const Matrix& g, const Matrix* a, std::size_t n,
                              SeedKey key) {
  if (n < 1) throw domain_error("mc_cosine: need at least one trial");
  const double gnorm = frob(g);
  if (gnorm == 0.0) throw domain_error("mc_cosine: zero gradient");

  CosineReport rep;
  rep.n_trials = n;
  rep.d_out = g.rows();
  rep.d_in = g.cols();

  Matrix target;  // the matrix R is dotted against
  if (a) {
    diag_detail::require_orthonormal(*a);
    if (a->rows() != g.cols()) {
      throw dimension_error("mc_cosine: basis does not match gradient");
    }
    target = multiply(g, *a);
    rep.r = a->cols();
    rep.subspace_energy_ratio = frob(target) / gnorm;
    rep.analytic_expectation =
        beta(static_cast<std::int64_t>(rep.d_out * rep.r)) *
        rep.subspace_energy_ratio;
  } else {
    target = g;
    rep.r = g.cols();
    rep.subspace_energy_ratio = 1.0;
    rep.analytic_expectation = expected_cosine_mezo(g);
  }

  const std::size_t dim = target.size();
  const std::size_t n_chunks =
      (n + diag_detail::kMcChunk - 1) / diag_detail::kMcChunk;
  std::vector<double> chunk_sum(n_chunks, 0.0);
  std::vector<double> chunk_sumsq(n_chunks, 0.0);

  diag_detail::for_each_chunk(n_chunks, [&](std::size_t c) {
    const std::size_t lo = c * diag_detail::kMcChunk;
    const std::size_t hi = std::min(n, lo + diag_detail::kMcChunk);
    std::vector<double> scratch(dim);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
      NormalStream ns(fork(key, kTagTrial, t));
      ns.fill(scratch.data(), dim);
      double dot = 0.0, nrm2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        dot += scratch[i] * target.data()[i];
        nrm2 += scratch[i] * scratch[i];
      }
      const double cosine = std::abs(dot) / (std::sqrt(nrm2) * gnorm);
      sum += cosine;
      sumsq += cosine * cosine;
    }
    chunk_sum[c] = sum;
    chunk_sumsq[c] = sumsq;
  });

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    sum += chunk_sum[c];
    sumsq += chunk_sumsq[c];
  }
  const double nd = static_cast<double>(n);
  rep.mc_mean = sum / nd;
  if (n > 1) {
    const double var =
        std::max(0.0, (sumsq - nd * rep.mc_mean * rep.mc_mean) / (nd - 1.0));
    rep.mc_stderr = std::sqrt(var / nd);
  }
  return rep;
}

// ||G A||_F == ||G A A^T||_F for orthonormal A.
inline bool projector_identity_check(const Matrix& g, const Matrix& a) {
  diag_detail::require_orthonormal(a);
  const Matrix ga = multiply(g, a);
  const double lhs = frob(ga);
  const double rhs = frob(multiply_bt(ga, a));
  const double scale = std::max(frob(g), 1e-300);
  return std::abs(lhs - rhs) <= 1e-10 * scale;
}

struct ConfinementRow {
  std::size_t linear_layer = 0;
  std::size_t rank_requested = 0;  // 0 means "full rank of H"
  std::size_t rank_used = 0;
  bool defined = true;  // false when the layer gradient is zero
  double cosine = 0.0;
};

// For each linear layer: cosine between G_l and its projection onto the span
// of the top-r left singular vectors of H_l, which collapses to
// ||G U_r||_F / ||G||_F. rank 0 requests the full numerical rank.
inline std::vector<ConfinementRow> confinement_profile(
    const ModelParams& params, const Minibatch& batch,
    const std::vector<std::size_t>& ranks) {
  if (params.n_linear == 0) {
    throw dimension_error("confinement_profile: no linear layers");
  }
  ActivationCapture cap;
  forward_capture(params, batch, cap);
  const LayerGradients lg = backprop_oracle(params, batch);

  std::vector<std::size_t> linear_to_layer(params.n_linear, 0);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (params.layers[i].kind == LayerKind::kLinear) {
      linear_to_layer[params.layers[i].linear_index] = i;
    }
  }

  std::vector<ConfinementRow> rows;
  for (std::size_t li = 0; li < params.n_linear; ++li) {
    const Matrix& g = lg.g[linear_to_layer[li]];
    const double gnorm = frob(g);
    const Svd sv = svd_full(cap.h[li]);
    const std::size_t full = numerical_rank(sv.sigma);
    for (std::size_t r : ranks) {
      ConfinementRow row;
      row.linear_layer = li;
      row.rank_requested = r;
      row.rank_used = std::min(r == 0 ? full : r, sv.u.cols());
      if (gnorm == 0.0) {
        row.defined = false;
      } else if (row.rank_used == 0) {
        // Zero activations: the projector is empty.
        row.cosine = 0.0;
      } else {
        const Matrix ur = take_cols(sv.u, row.rank_used);
        row.cosine = frob(multiply(g, ur)) / gnorm;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::vector<double> spectrum_dump(const Matrix& m) {
  return svd_full(m).sigma;
}

enum class Objective { kLinear, kQuadratic };

struct EstimatorMeanReport {
  Matrix mc_mean;
  Matrix target;
  double max_abs_dev = 0.0;
  double stderr_bound = 0.0;  // 3 * largest entrywise stderr
  bool ok = false;            // every entry within its own 3 stderr
  std::size_t n_trials = 0;
};

// Monte Carlo mean of the finite-mu estimate on a closed-form objective.
// linear: f(W) = <G, W> around W0 = 0, target G A A^T.
// quadratic: f(W) = 0.5 ||W||_F^2 around W0 = G, target same (gradient = W0).
// Both targets are exact at any mu because odd Gaussian moments vanish.
inline EstimatorMeanReport estimator_mean_check(Objective objective,
                                                std::size_t d_out,
                                                std::size_t d_in,
                                                const Matrix* a, double mu,
                                                std::size_t n, SeedKey key) {
  if (n < 1000) throw domain_error("estimator_mean_check: n must be >= 1000");
  if (!(mu > 0.0)) throw domain_error("estimator_mean_check: mu must be > 0");
  const Matrix g = gauss_matrix(fork(key, kTagObjective), d_out, d_in);
  std::size_t r = d_in;
  if (a) {
    diag_detail::require_orthonormal(*a);
    if (a->rows() != d_in) {
      throw dimension_error("estimator_mean_check: basis dims");
    }
    r = a->cols();
  }

  // f and f(W0): linear uses W0 = 0 so f0 = 0; quadratic sits at W0 = G.
  const double f0 =
      objective == Objective::kQuadratic ? 0.5 * frob(g) * frob(g) : 0.0;

  const std::size_t n_chunks =
      (n + diag_detail::kMcChunk - 1) / diag_detail::kMcChunk;
  std::vector<Matrix> chunk_sum(n_chunks);
  std::vector<Matrix> chunk_sumsq(n_chunks);

  diag_detail::for_each_chunk(n_chunks, [&](std::size_t c) {
    const std::size_t lo = c * diag_detail::kMcChunk;
    const std::size_t hi = std::min(n, lo + diag_detail::kMcChunk);
    Matrix sum(d_out, d_in), sumsq(d_out, d_in);
    for (std::size_t t = lo; t < hi; ++t) {
      const SeedKey trial = fork(key, kTagTrial, t);
      Matrix delta;
      if (a) {
        const Matrix rmat = gauss_matrix(trial, d_out, r);
        delta = multiply_bt(rmat, *a);
      } else {
        delta = gauss_matrix(trial, d_out, d_in);
      }
      double fplus;
      if (objective == Objective::kLinear) {
        Matrix w(delta);
        scale_inplace(w, mu);  // W0 + mu*Delta with W0 = 0
        fplus = frob(g, w);
      } else {
        Matrix w(g);
        axpy(w, mu, delta);
        fplus = 0.5 * frob(w) * frob(w);
      }
      const double ghat = (fplus - f0) / mu;
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double v = ghat * delta.data()[i];
        sum.data()[i] += v;
        sumsq.data()[i] += v * v;
      }
    }
    chunk_sum[c] = std::move(sum);
    chunk_sumsq[c] = std::move(sumsq);
  });

  Matrix sum(d_out, d_in), sumsq(d_out, d_in);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    axpy(sum, 1.0, chunk_sum[c]);
    axpy(sumsq, 1.0, chunk_sumsq[c]);
  }

  EstimatorMeanReport rep;
  rep.n_trials = n;
  if (a) {
    const Matrix ga = multiply(g, *a);
    rep.target = multiply_bt(ga, *a);
  } else {
    rep.target = g;
  }

  const double nd = static_cast<double>(n);
  rep.mc_mean = Matrix(d_out, d_in);
  rep.ok = true;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = sum.data()[i] / nd;
    rep.mc_mean.data()[i] = mean;
    const double var = std::max(
        0.0, (sumsq.data()[i] - nd * mean * mean) / (nd - 1.0));
    const double se = std::sqrt(var / nd);
    const double dev = std::abs(mean - rep.target.data()[i]);
    rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
    rep.stderr_bound = std::max(rep.stderr_bound, 3.0 * se);
    if (dev > 3.0 * se) rep.ok = false;
  }
  return rep;
}

struct InteractionReport {
  bool condition_holds = false;  // top-r mean of B_ii >= overall mean
  bool qualifies = false;        // condition + s < d_in + strict gap at r
  double lhs_ratio = 0.0;        // ||G U_r||^2 / ||G||^2 via B and sigma
  double rhs_ratio = 0.0;        // r / (d_in - 1/d_out)
  double cosine_gap = 0.0;       // analytic AGZO minus MeZO expectation
  std::size_t s = 0;             // activation rank
  std::vector<double> sigma;
  Matrix b;                      // s x s interaction matrix V^T Q^T Q V
};

// Evaluates the subspace-advantage condition on one (Q, H) instance.
// G = Q H^T; the lhs/rhs ratios and the analytic cosine gap come from the
// compact SVD of H and the diagonal of B.
inline InteractionReport interaction_condition_check(const Matrix& q,
                                                     const Matrix& h,
                                                     std::size_t r) {
  if (q.cols() != h.cols()) {
    throw dimension_error("interaction: Q and H need matching batch width");
  }
  if (r < 1) throw domain_error("interaction: r must be >= 1");

  const std::size_t d_out = q.rows(), d_in = h.rows();
  const Svd sv = svd_full(h);
  const std::size_t s = numerical_rank(sv.sigma);
  if (s < r) {
    throw rank_error("interaction: activation rank below r", s);
  }

  InteractionReport rep;
  rep.s = s;
  rep.sigma.assign(sv.sigma.begin(), sv.sigma.begin() + s);

  const Matrix v = take_cols(sv.v, s);
  const Matrix qv = multiply(q, v);
  rep.b = multiply_at(qv, qv);

  double top_b = 0.0, all_b = 0.0, top_e = 0.0, all_e = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    const double bii = rep.b(i, i);
    const double e = bii * rep.sigma[i] * rep.sigma[i];
    all_b += bii;
    all_e += e;
    if (i < r) {
      top_b += bii;
      top_e += e;
    }
  }
  rep.condition_holds =
      top_b / static_cast<double>(r) >= all_b / static_cast<double>(s);
  rep.lhs_ratio = top_e / all_e;
  rep.rhs_ratio = static_cast<double>(r) /
                  (static_cast<double>(d_in) - 1.0 / static_cast<double>(d_out));

  const Matrix g = multiply_bt(q, h);
  const Matrix ur = take_cols(sv.u, r);
  rep.cosine_gap = expected_cosine_agzo(g, ur) - expected_cosine_mezo(g);

  // Cross-check the ratio against the projector form it summarizes.
  const double gnorm2 = frob(g) * frob(g);
  const double ga = frob(multiply(g, ur));
  if (std::abs(rep.lhs_ratio - ga * ga / gnorm2) > 1e-8) {
    throw invariant_error("interaction: B-diagonal ratio disagrees with the "
                          "projector form");
  }

  const double gap_sigma = (r < s) ? rep.sigma[r] : 0.0;
  rep.qualifies =
      rep.condition_holds && s < d_in && rep.sigma[r - 1] > gap_sigma;
  if (rep.qualifies &&
      !(rep.lhs_ratio > rep.rhs_ratio && rep.cosine_gap > 0.0)) {
    throw invariant_error("interaction: qualified instance violates the "
                          "advantage bound");
  }
  return rep;
}

}  // namespace agzo

#endif  // AGZO_DIAGNOSTICS_HPP_
