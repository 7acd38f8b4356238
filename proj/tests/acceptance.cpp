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
//
// Acceptance gate: one PASS/FAIL line per criterion, every tolerance pinned
// here. Runs standalone (no test framework); exit 0 iff everything passes.
// --cli <path> points at the agzo-lab binary for the byte-identity checks.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "agzo/diagnostics.hpp"
#include "agzo/ledger.hpp"
#include "agzo/linalg.hpp"
#include "agzo/optimizers.hpp"
#include "agzo/report.hpp"
#include "agzo/subspace.hpp"

namespace agzo {
namespace {

using Notes = std::vector<std::string>;

std::string g_cli_path;

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

bool within_ulps(double a, double b, int k) {
  if (a == b) return true;
  double lo = a, hi = a;
  for (int i = 0; i < k; ++i) {
    lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
  }
  return b >= lo && b <= hi;
}

// ---------------------------------------------------------------- A1
// beta(D) against hand values; bounds and strict decrease for D in [2, 1e6].
bool run_a1(Notes& notes) {
  bool ok = true;
  const struct {
    std::int64_t d;
    double want;
  } hand[] = {{1, 1.0}, {2, 2.0 / M_PI}, {3, 0.5}, {4, 4.0 / (3.0 * M_PI)}};
  for (const auto& h : hand) {
    const double rel = std::abs(beta(h.d) - h.want) / h.want;
    if (rel > 1e-12) {
      ok = false;
      notes.push_back(fmt("beta(%lld) off by %.3g relative",
                          (long long)h.d, rel));
    }
  }
  std::int64_t bad = 0;
  for (std::int64_t d = 2; d <= 1000000; ++d) {
    if (!beta_bounds_check(d).ok) {
      ++bad;
      if (bad == 1) notes.push_back(fmt("bounds fail first at D=%lld",
                                        (long long)d));
    }
  }
  if (bad) ok = false;
  notes.push_back("hand values within 1e-12, bounds swept D=2..1e6");
  return ok;
}

// ---------------------------------------------------------------- A2
// Monte Carlo cosine vs the analytic expectation over a dims/rank sweep,
// subspace and dense estimators both. n = 2e5; gate |mc - analytic| <=
// 3*stderr + 1e-12*analytic (absolute guard for zero-variance combos) and
// 3*stderr < 1% of analytic.
bool run_a2(Notes& notes) {
  const SeedKey base{2026, 0};
  const std::size_t n = 200000;
  std::vector<std::array<std::size_t, 3>> combos;
  for (std::size_t d_out : {1, 8, 32}) {
    for (std::size_t d_in : {1, 8, 64}) {
      for (std::size_t r : {1, 4}) {
        if (r <= d_in) combos.push_back({d_out, d_in, r});
      }
    }
  }
  while (combos.size() < 20) {
    combos.push_back(combos[combos.size() - 15]);  // re-draw with a new index
  }

  bool ok = true;
  double worst_dev = 0.0, worst_rel = 0.0;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const auto [d_out, d_in, r] = combos[i];
    const Matrix g = gauss_matrix(fork(base, kTagObjective, i), d_out, d_in);
    const Matrix a =
        qr_orthonormal(gauss_matrix(fork(base, kTagSubspace, i), d_in, r)).q;
    const CosineReport reps[2] = {
        mc_cosine(g, &a, n, fork(base, kTagTrial, 2 * i)),
        mc_cosine(g, nullptr, n, fork(base, kTagTrial, 2 * i + 1))};
    for (const CosineReport& rep : reps) {
      const double dev = std::abs(rep.mc_mean - rep.analytic_expectation);
      const double gate = 3.0 * rep.mc_stderr + 1e-12 * rep.analytic_expectation;
      worst_dev = std::max(worst_dev,
                           rep.mc_stderr > 0 ? dev / rep.mc_stderr : 0.0);
      worst_rel =
          std::max(worst_rel, 3.0 * rep.mc_stderr / rep.analytic_expectation);
      if (dev > gate || 3.0 * rep.mc_stderr >= 0.01 * rep.analytic_expectation) {
        ok = false;
        notes.push_back(fmt(
            "config %zu (%zu,%zu,%zu) dev %.3g vs gate %.3g, 3se/analytic %.3g",
            i, d_out, d_in, rep.r, dev, gate,
            3.0 * rep.mc_stderr / rep.analytic_expectation));
      }
    }
  }
  notes.push_back(fmt("%zu configs, worst dev %.2f stderr, worst 3se %.2f%% "
                      "of analytic",
                      combos.size(), worst_dev, 100.0 * worst_rel));
  return ok;
}

// ---------------------------------------------------------------- A3
// Confinement: full-rank projection cosine = 1 +- 1e-6 on every linear layer
// over 10 batches of a 3-layer teacher-student model; non-decreasing in r
// (slack 1e-9).
bool run_a3(Notes& notes) {
  TaskSpec task;
  task.kind = TaskKind::kRegression;
  task.n_samples = 160;
  task.d_in = 24;
  task.n_outputs = 8;
  task.batch_size = 16;
  task.input_decay = 0.8;
  task.teacher_dims = {24, 20, 8};

  ModelSpec model;
  model.layer_dims = {24, 32, 16, 8};

  const SeedKey run{31, 0};
  const SynthDataset data = synth_task(fork(run, kTagTask), task);
  const ModelParams params = init_params(run, model);
  const BatchSchedule sched(fork(run, kTagShuffle), data, task.batch_size);

  const std::vector<std::size_t> ranks{1, 2, 4, 8, 0};
  bool ok = true;
  double worst_full = 0.0;
  for (std::size_t b = 0; b < 10; ++b) {
    const Minibatch batch = sched.batch(b);
    const auto rows = confinement_profile(params, batch, ranks);
    for (std::size_t li = 0; li < params.n_linear; ++li) {
      double prev = -1.0;
      for (std::size_t k = 0; k < ranks.size(); ++k) {
        const ConfinementRow& row = rows[li * ranks.size() + k];
        if (!row.defined) {
          ok = false;
          notes.push_back(fmt("batch %zu layer %zu rank %zu undefined", b, li,
                              ranks[k]));
          continue;
        }
        if (row.cosine < prev - 1e-9) {
          ok = false;
          notes.push_back(fmt("batch %zu layer %zu not monotone at rank %zu",
                              b, li, ranks[k]));
        }
        prev = row.cosine;
        if (row.rank_requested == 0) {
          worst_full = std::max(worst_full, std::abs(row.cosine - 1.0));
          if (std::abs(row.cosine - 1.0) > 1e-6) {
            ok = false;
            notes.push_back(fmt("batch %zu layer %zu full-rank cos %.12f", b,
                                li, row.cosine));
          }
        }
      }
    }
  }
  notes.push_back(
      fmt("10 batches x 3 layers, worst |full-rank cos - 1| = %.2e",
          worst_full));
  return ok;
}

// ---------------------------------------------------------------- A4
// Estimator means on closed-form objectives (dense and subspace, linear and
// quadratic) within entrywise 3 stderr at n = 1e5; plus the one-sided bias
// on a nonsmooth-perturbed objective f(W) = <G,W> + (c/2) sum w|w|, whose
// smoothing bias is exactly linear in mu: log-log slope must be 1.0 +- 0.15
// over mu in {1e-1, 1e-2, 1e-3}.
bool run_a4(Notes& notes) {
  bool ok = true;
  const Matrix a = qr_orthonormal(gauss_matrix(SeedKey{44, 0}, 10, 3)).q;
  const struct {
    Objective obj;
    const Matrix* basis;
    const char* label;
  } cases[] = {{Objective::kLinear, nullptr, "linear dense"},
               {Objective::kQuadratic, nullptr, "quadratic dense"},
               {Objective::kLinear, &a, "linear subspace"},
               {Objective::kQuadratic, &a, "quadratic subspace"}};
  int means_ok = 0;
  for (const auto& c : cases) {
    const EstimatorMeanReport rep = estimator_mean_check(
        c.obj, 6, 10, c.basis, 0.37, 100000, SeedKey{245, 0});
    means_ok += rep.ok;
    if (!rep.ok) {
      ok = false;
      notes.push_back(fmt("%s mean misses target: max dev %.3g vs %.3g",
                          c.label, rep.max_abs_dev, rep.stderr_bound));
    }
  }

  // Bias slope. The linear part has exactly-known mean G and is subtracted
  // per trial as a control variate, so the slope noise does not blow up at
  // small mu.
  const std::size_t d = 4, n = 100000;
  const double c_kink = 20.0;
  const Matrix g = gauss_matrix(fork(SeedKey{46, 0}, kTagObjective), d, d);
  const std::vector<double> mus{1e-1, 1e-2, 1e-3};
  std::vector<Matrix> bias_sum;
  for (std::size_t k = 0; k < mus.size(); ++k) bias_sum.emplace_back(d, d);

  const auto f = [&](const Matrix& w) {
    double v = frob(g, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      v += 0.5 * c_kink * w.data()[i] * std::abs(w.data()[i]);
    }
    return v;
  };
  for (std::size_t t = 0; t < n; ++t) {
    const Matrix delta = gauss_matrix(fork(SeedKey{47, 0}, kTagTrial, t), d, d);
    const double linear = frob(g, delta);
    for (std::size_t k = 0; k < mus.size(); ++k) {
      Matrix w(delta);
      scale_inplace(w, mus[k]);
      const double ghat = f(w) / mus[k];  // f(0) = 0
      axpy(bias_sum[k], ghat - linear, delta);
    }
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    scale_inplace(bias_sum[k], 1.0 / static_cast<double>(n));
    lx.push_back(std::log(mus[k]));
    ly.push_back(std::log(frob(bias_sum[k])));
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    mx += lx[k] / 3;
    my += ly[k] / 3;
  }
  double num = 0, den = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    num += (lx[k] - mx) * (ly[k] - my);
    den += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = num / den;
  if (std::abs(slope - 1.0) > 0.15) {
    ok = false;
    notes.push_back(fmt("bias slope %.4f outside 1.0 +- 0.15", slope));
  }
  notes.push_back(fmt("%d/4 mean checks ok, bias slope %.4f", means_ok,
                      slope));
  return ok;
}

// ---------------------------------------------------------------- A5
// Method comparison on a teacher-student classification task: 5 seeds, 2000
// steps, 2 queries per step, best-of-grid eta per method. Gates:
// (i) mean final loss: agzo <= mezo, (ii) seed-mean cosine agzo > mezo on
// >= 80% of logged steps, (iii) fo <= every gradient-free method.
bool run_a5(Notes& notes) {
  TrainPlan plan;
  plan.model.layer_dims = {48, 32, 8};
  plan.model.loss = Loss::kSoftmaxCrossEntropy;
  plan.task.kind = TaskKind::kClassification;
  plan.task.n_samples = 256;
  plan.task.d_in = 48;
  plan.task.n_outputs = 8;
  plan.task.batch_size = 32;
  plan.task.input_decay = 1.0;
  plan.step.mu = 1e-3;
  plan.step.rank = 8;
  plan.step.power_steps = 2;
  plan.steps = 2000;
  plan.cosine_every = 25;

  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const std::vector<double> zo_grid{0.05, 0.03, 0.015, 0.0075};
  const std::vector<double> fo_grid{0.3, 0.15, 0.075};

  double best_loss[4];
  double best_eta[4];
  std::vector<std::vector<RunReport>> winner(4);
  for (Method m :
       {Method::kMezo, Method::kLozo, Method::kAgzo, Method::kFo}) {
    const int mi = static_cast<int>(m);
    best_loss[mi] = std::numeric_limits<double>::infinity();
    best_eta[mi] = 0.0;
    for (double eta : (m == Method::kFo ? fo_grid : zo_grid)) {
      plan.step.method = m;
      plan.step.eta = eta;
      std::vector<RunReport> runs;
      double sum = 0.0;
      for (std::uint64_t s : seeds) {
        plan.seed = s;
        runs.push_back(train_loop(plan));
        if (runs.back().truncated) sum = std::numeric_limits<double>::infinity();
        sum += runs.back().final_loss;
      }
      const double mean = sum / static_cast<double>(seeds.size());
      if (mean < best_loss[mi]) {
        best_loss[mi] = mean;
        best_eta[mi] = eta;
        winner[mi] = std::move(runs);
      }
    }
  }

  const int mezo = static_cast<int>(Method::kMezo);
  const int lozo = static_cast<int>(Method::kLozo);
  const int agzo = static_cast<int>(Method::kAgzo);
  const int fo = static_cast<int>(Method::kFo);

  bool ok = true;
  if (!(best_loss[agzo] <= best_loss[mezo])) {
    ok = false;
    notes.push_back(fmt("(i) agzo %.5f > mezo %.5f", best_loss[agzo],
                        best_loss[mezo]));
  }
  std::size_t logged = 0, wins = 0;
  for (std::size_t i = 0; i < winner[mezo][0].rows.size(); ++i) {
    if (!winner[mezo][0].rows[i].has_cosine) continue;
    double cm = 0.0, ca = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      cm += winner[mezo][s].rows[i].cosine;
      ca += winner[agzo][s].rows[i].cosine;
    }
    ++logged;
    wins += ca > cm;
  }
  if (wins * 5 < logged * 4) {  // wins/logged < 0.8
    ok = false;
    notes.push_back(fmt("(ii) cosine dominance %zu/%zu below 80%%", wins,
                        logged));
  }
  for (int zo : {mezo, lozo, agzo}) {
    if (!(best_loss[fo] <= best_loss[zo])) {
      ok = false;
      notes.push_back(fmt("(iii) fo %.5f > %s %.5f", best_loss[fo],
                          method_name(static_cast<Method>(zo)),
                          best_loss[zo]));
    }
  }
  notes.push_back(fmt(
      "final loss: fo %.3f (eta %g), agzo %.3f (%g), mezo %.3f (%g), "
      "lozo %.3f (%g); cosine dominance %zu/%zu",
      best_loss[fo], best_eta[fo], best_loss[agzo], best_eta[agzo],
      best_loss[mezo], best_eta[mezo], best_loss[lozo], best_eta[lozo], wins,
      logged));
  return ok;
}

// ---------------------------------------------------------------- A6
// 500 random (Q, H) instances with low-rank H (s < d_in), a strict spectral
// gap at r, and top-r interaction average >= the global average: the energy
// ratio must beat r/(d_in - 1/d_out) and the analytic cosine gap must be
// positive every single time.
bool run_a6(Notes& notes) {
  const SeedKey base{909, 0};
  const std::size_t d_ins[] = {5, 6, 8, 12};
  const std::size_t d_outs[] = {2, 4, 6};

  std::size_t qualified = 0, attempts = 0, violations = 0;
  for (std::uint64_t i = 0; qualified < 500 && attempts < 5000; ++i) {
    ++attempts;
    const std::size_t d_in = d_ins[i % 4];
    const std::size_t d_out = d_outs[i % 3];
    const std::size_t s = d_in - 1 - (i % 2);
    const std::size_t r = 1 + (i % std::min<std::size_t>(3, s - 1));
    const std::size_t m = d_in + 4;

    Matrix u = qr_orthonormal(gauss_matrix(fork(base, kTagFactorU, i),
                                           d_in, s)).q;
    const Matrix v = qr_orthonormal(gauss_matrix(fork(base, kTagFactorV, i),
                                                 m, s)).q;
    for (std::size_t j = 0; j < s; ++j) {
      const double sj = std::pow(static_cast<double>(j + 1), -0.75);
      for (std::size_t row = 0; row < d_in; ++row) u(row, j) *= sj;
    }
    const Matrix h = multiply_bt(u, v);
    const Matrix q = gauss_matrix(fork(base, kTagNoise, i), d_out, m);

    try {
      const InteractionReport rep = interaction_condition_check(q, h, r);
      if (!rep.qualifies) continue;
      ++qualified;
      if (!(rep.lhs_ratio > rep.rhs_ratio && rep.cosine_gap > 0.0)) {
        ++violations;
        notes.push_back(fmt("instance %llu: lhs %.4f rhs %.4f gap %.4g",
                            (unsigned long long)i, rep.lhs_ratio,
                            rep.rhs_ratio, rep.cosine_gap));
      }
    } catch (const error& e) {
      ++violations;
      notes.push_back(fmt("instance %llu threw: %s", (unsigned long long)i,
                          e.what()));
    }
  }
  notes.push_back(fmt("%zu qualified of %zu attempts, %zu violations",
                      qualified, attempts, violations));
  return qualified >= 500 && violations == 0;
}

// ---------------------------------------------------------------- A7
// Mechanics: bitwise seed regeneration (1000 records), eta=0 restore within
// 4 ulps, rank cap via sigma_{r+1} <= 1e-10 sigma_1, orthonormal (1e-8) and
// contained (1e-6) bases, and byte-identical CLI reruns.
bool byte_equal_files(const std::filesystem::path& a,
                      const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return !sa.str().empty() && sa.str() == sb.str();
}

bool run_a7(Notes& notes) {
  bool ok = true;

  // Seed regeneration, mixed record kinds.
  std::size_t regen_ok = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const std::size_t rows = 2 + i % 7, cols = 2 + (i / 3) % 9;
    const SeedKey seed{4000 + i, i % 5};
    PerturbationRecord rec;
    if (i % 3 == 0) {
      rec = sample_dense(0, rows, cols, seed);
    } else if (i % 3 == 1) {
      auto basis = std::make_shared<Matrix>(
          qr_orthonormal(gauss_matrix(SeedKey{5000 + i, 0}, cols,
                                      1 + i % std::min(rows, cols)))
              .q);
      rec = sample_low_rank(0, rows, basis, seed);
    } else {
      rec = sample_gauss_pair(0, rows, cols, 1 + i % std::min(rows, cols),
                              seed);
    }
    const Matrix first = regenerate(rec);
    const Matrix second = regenerate(rec);
    bool same = first.rows() == second.rows() && first.cols() == second.cols();
    for (std::size_t j = 0; same && j < first.size(); ++j) {
      same = first.data()[j] == second.data()[j];
    }
    regen_ok += same;
  }
  if (regen_ok != 1000) {
    ok = false;
    notes.push_back(fmt("regeneration stable for %zu/1000 records", regen_ok));
  }

  // eta = 0 steps must hand back the starting weights within 4 ulps.
  ModelSpec model;
  model.layer_dims = {16, 8, 4};
  TaskSpec task;
  task.kind = TaskKind::kRegression;
  task.n_samples = 32;
  task.d_in = 16;
  task.n_outputs = 4;
  task.batch_size = 8;
  const SynthDataset data = synth_task(fork(SeedKey{71, 0}, kTagTask), task);
  const BatchSchedule sched(fork(SeedKey{71, 0}, kTagShuffle), data,
                            task.batch_size);
  const Minibatch batch = sched.batch(0);

  std::vector<GradientEstimate> estimates;
  for (Method m : {Method::kMezo, Method::kLozo, Method::kAgzo}) {
    ModelParams params = init_params(SeedKey{72, 0}, model);
    const ModelParams before = params;
    StepConfig cfg;
    cfg.method = m;
    cfg.mu = 1e-4;
    cfg.eta = 0.0;
    cfg.rank = 3;
    cfg.power_steps = 2;
    GradientEstimate est =
        m == Method::kMezo
            ? mezo_step(params, batch, cfg, SeedKey{73, 0})
            : m == Method::kLozo ? lozo_step(params, batch, cfg, SeedKey{73, 0})
                                 : agzo_step(params, batch, cfg, SeedKey{73, 0});
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      for (std::size_t j = 0; j < params.layers[l].w.size(); ++j) {
        if (!within_ulps(before.layers[l].w.data()[j],
                         params.layers[l].w.data()[j], 4)) {
          ok = false;
          notes.push_back(fmt("%s restore drift beyond 4 ulps at layer %zu",
                              method_name(m), l));
          l = params.layers.size();
          break;
        }
      }
    }
    estimates.push_back(std::move(est));
  }

  // Rank cap on the structured perturbations.
  for (const GradientEstimate& est : estimates) {
    for (const PerturbationRecord& rec : est.records) {
      if (rec.kind == PerturbKind::kDense) continue;
      if (rec.rank >= std::min(rec.rows, rec.cols)) continue;
      const std::vector<double> sigma = svd_full(regenerate(rec)).sigma;
      if (sigma[rec.rank] > 1e-10 * sigma[0]) {
        ok = false;
        notes.push_back(fmt("layer %zu rank %zu leaks: sigma ratio %.3g",
                            rec.layer, rec.rank, sigma[rec.rank] / sigma[0]));
      }
    }
  }

  // Subspace bases: orthonormal and inside col(H).
  for (std::uint64_t i = 0; i < 50; ++i) {
    const std::size_t d = 6 + i % 12, m = d + 2 + i % 20;
    Matrix h = gauss_matrix(SeedKey{74, i}, d, m);
    for (std::size_t row = 0; row < d; ++row) {
      const double w = std::pow(static_cast<double>(row + 1), -0.5);
      for (std::size_t col = 0; col < m; ++col) h(row, col) *= w;
    }
    const Matrix h_copy = h;
    const auto basis =
        subspace_extract(std::move(h), 4, 3, SeedKey{75, i});
    if (!basis) {
      ok = false;
      notes.push_back(fmt("extraction %llu unexpectedly degenerate",
                          (unsigned long long)i));
      continue;
    }
    Matrix gram = multiply_at(basis->a, basis->a);
    for (std::size_t j = 0; j < gram.rows(); ++j) gram(j, j) -= 1.0;
    if (max_abs(gram) > 1e-8) {
      ok = false;
      notes.push_back(fmt("basis %llu orthonormality defect %.3g",
                          (unsigned long long)i, max_abs(gram)));
    }
    const Svd sv = svd_full(h_copy);
    const Matrix uh = take_cols(sv.u, numerical_rank(sv.sigma));
    Matrix resid = basis->a;
    const Matrix proj = multiply(uh, multiply_at(uh, basis->a));
    axpy(resid, -1.0, proj);
    if (frob(resid) > 1e-6) {
      ok = false;
      notes.push_back(fmt("basis %llu containment residual %.3g",
                          (unsigned long long)i, frob(resid)));
    }
  }

  // Byte-identical CLI reruns (training CSVs and a pure-function table).
  if (g_cli_path.empty()) {
    ok = false;
    notes.push_back("no --cli path given; cannot check CSV determinism");
  } else {
    namespace fs = std::filesystem;
    const fs::path area =
        fs::temp_directory_path() / fmt("agzo-accept-%d", (int)getpid());
    fs::create_directories(area);
    const fs::path cfg = area / "train.json";
    write_text_file(cfg, R"({
  "seed": 17,
  "model": {"layer_dims": [12, 16, 4], "loss": "cross_entropy"},
  "task": {"kind": "classification", "n_samples": 64, "batch_size": 16,
           "input_decay": 0.5},
  "step": {"method": "agzo", "mu": 1e-3, "eta": 0.01, "rank": 2,
           "power_steps": 2, "steps": 40, "cosine_every": 10},
  "output": {"directory": "unused"}
}
)");
    const fs::path beta_cfg = area / "beta.json";
    write_text_file(beta_cfg,
                    R"({"diagnostics": {"beta_dims": [1, 2, 3, 4, 64, 4096]},
 "output": {"directory": "unused"}}
)");
    const auto run = [&](const std::string& sub, const fs::path& conf,
                         const fs::path& dir) {
      const std::string cmd = "\"" + g_cli_path + "\" " + sub +
                              " --config \"" + conf.string() +
                              "\" --set output.directory=\"" + dir.string() +
                              "\" >/dev/null 2>&1";
      return std::system(cmd.c_str()) == 0;
    };
    // Rerun into the same directory (after copying the first pass aside) so
    // every output file, the frozen config included, must match byte for
    // byte.
    const auto rerun_same_dir = [&](const std::string& sub,
                                    const fs::path& conf,
                                    const fs::path& dir) {
      if (!run(sub, conf, dir)) return false;
      std::filesystem::copy(dir, dir.string() + ".first",
                            std::filesystem::copy_options::recursive);
      return run(sub, conf, dir);
    };
    const fs::path tdir = area / "train", bdir = area / "beta";
    if (!rerun_same_dir("train", cfg, tdir) ||
        !rerun_same_dir("beta-table", beta_cfg, bdir)) {
      ok = false;
      notes.push_back("CLI subprocess returned nonzero");
    } else {
      for (const char* f : {"steps.csv", "summary.json",
                            "config.frozen.json"}) {
        if (!byte_equal_files(fs::path(tdir.string() + ".first") / f,
                              tdir / f)) {
          ok = false;
          notes.push_back(fmt("train rerun differs in %s", f));
        }
      }
      for (const char* f : {"beta.csv", "config.frozen.json"}) {
        if (!byte_equal_files(fs::path(bdir.string() + ".first") / f,
                              bdir / f)) {
          ok = false;
          notes.push_back(fmt("beta-table rerun differs in %s", f));
        }
      }
    }
    std::error_code ec;
    fs::remove_all(area, ec);
  }

  notes.push_back(fmt("1000 regenerations, 3 restores, %zu structured "
                      "records, 50 bases, 2 CLI reruns",
                      estimates[1].records.size() +
                          estimates[2].records.size()));
  return ok;
}

// ---------------------------------------------------------------- A8
// Ledger bound per sweep point: agzo_peak - mezo_peak <= stored bases plus
// one activation, and fo_peak > agzo_peak.
bool run_a8(Notes& notes) {
  StepConfig step;
  step.mu = 1e-3;
  step.eta = 1e-2;
  step.rank = 4;
  step.power_steps = 2;

  bool ok = true;
  std::uint64_t worst_margin = 0;
  for (std::size_t batch_size : {16, 64}) {
    for (std::size_t width : {32, 128}) {
      ModelSpec model;
      model.layer_dims = {width, width, width, 4};
      TaskSpec task;
      task.kind = TaskKind::kRegression;
      task.n_samples = batch_size;
      task.d_in = width;
      task.n_outputs = 4;
      task.batch_size = batch_size;
      const SeedKey run{88, 0};
      const SynthDataset data = synth_task(fork(run, kTagTask), task);
      const Minibatch batch{Matrix(data.inputs), Matrix(data.targets)};

      std::uint64_t peak[4] = {0, 0, 0, 0};
      for (Method m : {Method::kMezo, Method::kAgzo, Method::kFo}) {
        ModelParams params = init_params(run, model);
        StepConfig cfg = step;
        cfg.method = m;
        ledger::reset_peak();
        switch (m) {
          case Method::kMezo:
            mezo_step(params, batch, cfg, fork(run, kTagStep));
            break;
          case Method::kAgzo:
            agzo_step(params, batch, cfg, fork(run, kTagStep));
            break;
          default:
            fo_step(params, batch, cfg.eta);
        }
        peak[static_cast<int>(m)] = ledger::snapshot().peak_bytes;
      }

      std::uint64_t bound = 0, max_h = 0;
      for (std::size_t li = 0; li + 1 < model.layer_dims.size(); ++li) {
        const std::size_t d_in = model.layer_dims[li];
        const std::size_t r = std::min({step.rank_for(li), d_in, batch_size});
        bound += d_in * r * 8;
        max_h = std::max<std::uint64_t>(max_h, d_in * batch_size * 8);
      }
      bound += max_h;

      const std::uint64_t mezo = peak[static_cast<int>(Method::kMezo)];
      const std::uint64_t agzo = peak[static_cast<int>(Method::kAgzo)];
      const std::uint64_t fo = peak[static_cast<int>(Method::kFo)];
      if (agzo > mezo + bound) {
        ok = false;
        notes.push_back(fmt("batch %zu width %zu: agzo-mezo %llu > bound %llu",
                            batch_size, width,
                            (unsigned long long)(agzo - mezo),
                            (unsigned long long)bound));
      }
      if (fo <= agzo) {
        ok = false;
        notes.push_back(fmt("batch %zu width %zu: fo %llu <= agzo %llu",
                            batch_size, width, (unsigned long long)fo,
                            (unsigned long long)agzo));
      }
      worst_margin = std::max(
          worst_margin, agzo > mezo ? agzo - mezo : std::uint64_t{0});
    }
  }
  notes.push_back(fmt("4 sweep points, max agzo-mezo overhead %llu bytes",
                      (unsigned long long)worst_margin));
  return ok;
}

}  // namespace
}  // namespace agzo

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") agzo::g_cli_path = argv[i + 1];
  }

  struct Criterion {
    const char* label;
    double limit_s;
    bool (*run)(agzo::Notes&);
  };
  const Criterion criteria[] = {
      {"A1 beta values and bounds", 5.0, agzo::run_a1},
      {"A2 expected cosine vs Monte Carlo", 120.0, agzo::run_a2},
      {"A3 gradient confinement", 30.0, agzo::run_a3},
      {"A4 estimator means and bias slope", 120.0, agzo::run_a4},
      {"A5 method comparison", 600.0, agzo::run_a5},
      {"A6 subspace advantage condition", 60.0, agzo::run_a6},
      {"A7 mechanics invariants", 60.0, agzo::run_a7},
      {"A8 memory ledger bounds", 60.0, agzo::run_a8},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    agzo::Notes notes;
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    try {
      pass = c.run(notes);
    } catch (const std::exception& e) {
      notes.push_back(std::string("unhandled exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (secs > c.limit_s) {
      pass = false;
      notes.push_back(agzo::fmt("over time budget: %.1f s > %.0f s", secs,
                                c.limit_s));
    }
    failures += !pass;
    std::printf("%-38s %s  (%.1f s)\n", c.label, pass ? "PASS" : "FAIL",
                secs);
    for (const std::string& n : notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
