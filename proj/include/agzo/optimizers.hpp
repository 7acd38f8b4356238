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

#ifndef AGZO_OPTIMIZERS_HPP_
#define AGZO_OPTIMIZERS_HPP_

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/ledger.hpp"
#include "agzo/model.hpp"
#include "agzo/perturb.hpp"
#include "agzo/subspace.hpp"
#include "agzo/task.hpp"

namespace agzo {

enum class Method { kMezo, kLozo, kAgzo, kFo };
enum class Difference { kForward, kCentral };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kMezo: return "mezo";
    case Method::kLozo: return "lozo";
    case Method::kAgzo: return "agzo";
    case Method::kFo: return "fo";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "mezo") return Method::kMezo;
  if (s == "lozo") return Method::kLozo;
  if (s == "agzo") return Method::kAgzo;
  if (s == "fo") return Method::kFo;
  throw config_error("unknown method '" + s + "'");
}

inline Difference parse_difference(const std::string& s) {
  if (s == "forward") return Difference::kForward;
  if (s == "central") return Difference::kCentral;
  throw config_error("unknown difference '" + s + "'");
}

struct StepConfig {
  Method method = Method::kMezo;
  double mu = 1e-7;
  double eta = 1e-4;
  std::size_t rank = 1;            // uniform r for the low-rank methods
  std::vector<std::size_t> ranks;  // optional per-linear-layer override
  std::size_t power_steps = 3;     // K
  Difference difference = Difference::kForward;
  bool exact_restore = false;      // checkpoint copy instead of seed restore
  bool agzo_scale_by_rank = false; // 1/r factor on the update, off by default

  std::size_t rank_for(std::size_t linear_index) const {
    if (ranks.empty()) return rank;
    if (linear_index >= ranks.size()) {
      throw config_error("ranks list shorter than the linear layer count");
    }
    return ranks[linear_index];
  }
};

namespace opt_detail {

inline void check_step(const StepConfig& cfg, Method expected) {
  if (cfg.method != expected) {
    throw config_error("step config method does not match the step function");
  }
  if (!(cfg.mu > 0.0)) throw config_error("mu must be positive");
  if (cfg.eta < 0.0) throw config_error("eta must be nonnegative");
  if (cfg.rank < 1) throw config_error("rank must be >= 1");
  for (std::size_t r : cfg.ranks) {
    if (r < 1) throw config_error("ranks entries must be >= 1");
  }
}

}  // namespace opt_detail

// One zeroth-order step's worth of state. Layer gradients are never stored;
// they are a scalar times the regenerable perturbation.
struct GradientEstimate {
  double f0 = 0.0;
  double fplus = 0.0;
  double fminus = std::numeric_limits<double>::quiet_NaN();
  double g = 0.0;  // projected gradient (f difference over mu)
  std::vector<PerturbationRecord> records;
  std::vector<std::size_t> degenerate_layers;  // dense fallbacks among linear

  // Materialized estimate for layer l: g * scale_l * Delta_l.
  Matrix layer_estimate(std::size_t l) const {
    Matrix d = regenerate(records.at(l));
    scale_inplace(d, g * records.at(l).update_scale);
    return d;
  }
};

namespace opt_detail {

// Shared tail of every ZO step: evaluate the difference quotient around the
// already-sampled perturbation, then fold restore and update into one pass.
// Any evaluation failure restores the weights before rethrowing.
inline GradientEstimate run_difference(ModelParams& params,
                                       const Minibatch& batch,
                                       const StepConfig& cfg, double f0,
                                       std::vector<PerturbationRecord> records,
                                       std::vector<std::size_t> degenerate) {
  GradientEstimate est;
  est.f0 = f0;
  est.records = std::move(records);
  est.degenerate_layers = std::move(degenerate);

  std::vector<Matrix> saved;
  if (cfg.exact_restore) {
    saved.reserve(params.layers.size());
    for (const Layer& l : params.layers) saved.push_back(l.w);
  }

  double offset = 0.0;  // current coefficient on Delta inside the weights
  try {
    apply_perturbation(params, est.records, cfg.mu);
    offset = cfg.mu;
    est.fplus = forward(params, batch);
    if (cfg.difference == Difference::kCentral) {
      add_scaled(params, est.records, -2.0 * cfg.mu);
      offset = -cfg.mu;
      est.fminus = forward(params, batch);
      est.g = (est.fplus - est.fminus) / (2.0 * cfg.mu);
    } else {
      est.g = (est.fplus - est.f0) / cfg.mu;
    }
  } catch (...) {
    if (cfg.exact_restore) {
      for (std::size_t i = 0; i < saved.size(); ++i) {
        params.layers[i].w = saved[i];
      }
    } else if (offset != 0.0) {
      add_scaled(params, est.records, -offset);
    }
    throw;
  }

  if (cfg.exact_restore) {
    for (std::size_t i = 0; i < saved.size(); ++i) {
      params.layers[i].w = std::move(saved[i]);
    }
    restore_and_update(params, est.records, 0.0, cfg.eta, est.g);
  } else {
    restore_and_update(params, est.records, offset, cfg.eta, est.g);
  }
  return est;
}

}  // namespace opt_detail

// Dense Gaussian direction over every trainable layer.
inline GradientEstimate mezo_step(ModelParams& params, const Minibatch& batch,
                                  const StepConfig& cfg, SeedKey key) {
  opt_detail::check_step(cfg, Method::kMezo);
  const double f0 = forward(params, batch);
  std::vector<PerturbationRecord> recs;
  recs.reserve(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Matrix& w = params.layers[i].w;
    recs.push_back(sample_dense(i, w.rows(), w.cols(), with_stream(key, i)));
  }
  return opt_detail::run_difference(params, batch, cfg, f0, std::move(recs),
                                    {});
}

// Factor-pair direction U V^T per linear layer, scaled 1/r in the update;
// bias layers keep the dense branch at scale 1.
inline GradientEstimate lozo_step(ModelParams& params, const Minibatch& batch,
                                  const StepConfig& cfg, SeedKey key) {
  opt_detail::check_step(cfg, Method::kLozo);
  const double f0 = forward(params, batch);
  std::vector<PerturbationRecord> recs;
  recs.reserve(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    const SeedKey seed = with_stream(key, i);
    if (l.kind == LayerKind::kLinear) {
      const std::size_t r = std::min(
          {cfg.rank_for(l.linear_index), l.w.rows(), l.w.cols()});
      auto rec = sample_gauss_pair(i, l.w.rows(), l.w.cols(), r, seed);
      rec.update_scale = 1.0 / static_cast<double>(r);
      recs.push_back(std::move(rec));
    } else {
      recs.push_back(sample_dense(i, l.w.rows(), l.w.cols(), seed));
    }
  }
  return opt_detail::run_difference(params, batch, cfg, f0, std::move(recs),
                                    {});
}

// Activation-informed direction: the f0 forward pass hands each linear
// layer's input to the extractor, which returns a frozen basis for that
// step's perturbation. Layers whose activations vanish fall back to dense.
inline GradientEstimate agzo_step(ModelParams& params, const Minibatch& batch,
                                  const StepConfig& cfg, SeedKey key) {
  opt_detail::check_step(cfg, Method::kAgzo);

  std::vector<std::size_t> linear_to_layer(params.n_linear, 0);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (params.layers[i].kind == LayerKind::kLinear) {
      linear_to_layer[params.layers[i].linear_index] = i;
    }
  }

  std::vector<std::optional<ActivationBasis>> bases(params.n_linear);
  const LinearHook hook = [&](std::size_t li, Matrix&& h) {
    const std::size_t cap = std::min(h.rows(), h.cols());
    const std::size_t r = std::min(cfg.rank_for(li), cap);
    bases[li] = subspace_extract(std::move(h), r, cfg.power_steps,
                                 with_stream(key, linear_to_layer[li]));
  };
  const double f0 = forward(params, batch, &hook);

  std::vector<PerturbationRecord> recs;
  std::vector<std::size_t> degenerate;
  recs.reserve(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    const SeedKey seed = with_stream(key, i);
    if (l.kind == LayerKind::kLinear && bases[l.linear_index]) {
      auto basis = std::make_shared<const Matrix>(
          std::move(bases[l.linear_index]->a));
      auto rec = sample_low_rank(i, l.w.rows(), std::move(basis), seed);
      if (cfg.agzo_scale_by_rank) {
        rec.update_scale = 1.0 / static_cast<double>(rec.rank);
      }
      recs.push_back(std::move(rec));
    } else {
      if (l.kind == LayerKind::kLinear) degenerate.push_back(i);
      recs.push_back(sample_dense(i, l.w.rows(), l.w.cols(), seed));
    }
  }
  return opt_detail::run_difference(params, batch, cfg, f0, std::move(recs),
                                    std::move(degenerate));
}

// Exact gradient step via the backprop oracle.
inline double fo_step(ModelParams& params, const Minibatch& batch,
                      double eta) {
  const LayerGradients lg = backprop_oracle(params, batch);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    axpy(params.layers[i].w, -eta, lg.g[i]);
  }
  return lg.loss;
}

// Cosine between the stacked estimate g*scale*Delta and stacked reference
// gradients, regenerating one layer at a time. Returns 0 when either side
// has no energy.
inline double estimate_cosine(const GradientEstimate& est,
                              const std::vector<Matrix>& reference) {
  if (reference.size() != est.records.size()) {
    throw dimension_error("estimate_cosine: reference layer count mismatch");
  }
  double num = 0.0, est_sq = 0.0, ref_sq = 0.0;
  for (std::size_t i = 0; i < est.records.size(); ++i) {
    const Matrix d = regenerate(est.records[i]);
    const double s = est.g * est.records[i].update_scale;
    num += s * frob(d, reference[i]);
    est_sq += s * s * frob(d, d);
    ref_sq += frob(reference[i], reference[i]);
  }
  if (est_sq == 0.0 || ref_sq == 0.0) return 0.0;
  return num / std::sqrt(est_sq * ref_sq);
}

struct TrainPlan {
  ModelSpec model;
  TaskSpec task;
  StepConfig step;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::size_t cosine_every = 0;  // 0 disables cosine logging
  bool deterministic_timing = true;
};

struct StepRow {
  std::size_t step = 0;
  double loss = 0.0;
  bool has_cosine = false;
  double cosine = 0.0;
  std::uint64_t peak_bytes = 0;
  std::uint64_t elapsed_ns = 0;
};

struct RunReport {
  Method method = Method::kMezo;
  std::vector<StepRow> rows;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double final_accuracy = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
  std::string failure;
  std::size_t degenerate_events = 0;
};

namespace opt_detail {

inline void check_plan(const TrainPlan& plan) {
  if (plan.model.layer_dims.empty() ||
      plan.model.layer_dims.front() != plan.task.d_in ||
      plan.model.layer_dims.back() != plan.task.n_outputs) {
    throw config_error("model dims do not match the task");
  }
  const bool classify = plan.task.kind == TaskKind::kClassification;
  if (classify != (plan.model.loss == Loss::kSoftmaxCrossEntropy)) {
    throw config_error("loss head does not match the task kind");
  }
  if (!(plan.step.eta > 0.0)) {
    throw config_error("training requires eta > 0");
  }
}

}  // namespace opt_detail

inline RunReport train_loop(const TrainPlan& plan) {
  opt_detail::check_plan(plan);
  const SeedKey run{plan.seed, 0};
  const SynthDataset data = synth_task(fork(run, kTagTask), plan.task);
  ModelParams params = init_params(run, plan.model);
  const BatchSchedule sched(fork(run, kTagShuffle), data,
                            plan.task.batch_size);

  RunReport rep;
  rep.method = plan.step.method;
  rep.rows.reserve(plan.steps);

  for (std::size_t t = 0; t < plan.steps; ++t) {
    const Minibatch batch = sched.batch(t);
    StepRow row;
    row.step = t;

    const bool want_cosine =
        plan.cosine_every != 0 && t % plan.cosine_every == 0;
    std::vector<Matrix> reference;
    try {
      if (want_cosine && plan.step.method != Method::kFo) {
        LayerGradients lg = backprop_oracle(params, batch);
        reference = std::move(lg.g);
      }
    } catch (const numeric_error& e) {
      rep.truncated = true;
      rep.failure = e.what();
      break;
    }

    ledger::reset_peak();
    const auto t_start = std::chrono::steady_clock::now();
    try {
      const SeedKey step_key = fork(run, kTagStep, t);
      switch (plan.step.method) {
        case Method::kFo:
          row.loss = fo_step(params, batch, plan.step.eta);
          if (want_cosine) {
            row.has_cosine = true;
            row.cosine = 1.0;
          }
          break;
        case Method::kMezo:
        case Method::kLozo:
        case Method::kAgzo: {
          const GradientEstimate est =
              plan.step.method == Method::kMezo
                  ? mezo_step(params, batch, plan.step, step_key)
                  : plan.step.method == Method::kLozo
                        ? lozo_step(params, batch, plan.step, step_key)
                        : agzo_step(params, batch, plan.step, step_key);
          row.loss = est.f0;
          rep.degenerate_events += est.degenerate_layers.size();
          if (want_cosine) {
            row.has_cosine = true;
            row.cosine = estimate_cosine(est, reference);
          }
          break;
        }
      }
    } catch (const numeric_error& e) {
      rep.truncated = true;
      rep.failure = e.what();
      break;
    }
    const auto t_end = std::chrono::steady_clock::now();
    row.peak_bytes = ledger::snapshot().peak_bytes;
    row.elapsed_ns =
        plan.deterministic_timing
            ? 0
            : static_cast<std::uint64_t>(
                  std::chrono::duration_cast<std::chrono::nanoseconds>(
                      t_end - t_start)
                      .count());
    rep.rows.push_back(row);
  }

  try {
    Minibatch full{data.inputs, data.targets};
    rep.final_loss = forward(params, full);
    if (plan.task.kind == TaskKind::kClassification) {
      const Matrix out = model_output(params, data.inputs);
      std::size_t hits = 0;
      for (std::size_t j = 0; j < out.cols(); ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < out.rows(); ++i) {
          if (out(i, j) > out(arg, j)) arg = i;
        }
        hits += arg == static_cast<std::size_t>(data.targets(0, j));
      }
      rep.final_accuracy =
          static_cast<double>(hits) / static_cast<double>(out.cols());
    }
  } catch (const numeric_error& e) {
    // Broken weights can fail the closing evaluation too; the report keeps
    // NaN finals and the first failure message.
    rep.truncated = true;
    if (rep.failure.empty()) rep.failure = e.what();
  }
  return rep;
}

struct GridResult {
  double eta = 0.0;
  RunReport report;
};

// Runs the plan once per eta and keeps the best final loss (ties by the
// smaller eta). Mirrors a per-method learning-rate grid search.
inline GridResult best_of_grid(TrainPlan plan,
                               const std::vector<double>& etas) {
  if (etas.empty()) throw config_error("eta grid must not be empty");
  GridResult best;
  bool have = false;
  for (double eta : etas) {
    plan.step.eta = eta;
    RunReport rep = train_loop(plan);
    if (!have || rep.final_loss < best.report.final_loss) {
      best.eta = eta;
      best.report = std::move(rep);
      have = true;
    }
  }
  return best;
}

}  // namespace agzo

#endif  // AGZO_OPTIMIZERS_HPP_
