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

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agzo/config.hpp"
#include "agzo/diagnostics.hpp"
#include "agzo/ledger.hpp"
#include "agzo/optimizers.hpp"
#include "agzo/report.hpp"

namespace agzo {
namespace {

std::filesystem::path prepare_run_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  write_text_file(dir / "config.frozen.json",
                  resolved_json(cfg).dump(2) + "\n");
  return dir;
}

void write_summary(const std::filesystem::path& dir,
                   const nlohmann::json& summary) {
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

int cmd_train(const ExperimentConfig& cfg) {
  const TrainPlan plan = experiment_plan(cfg);
  const std::filesystem::path dir = prepare_run_dir(cfg);

  const RunReport rep = train_loop(plan);

  CsvFile csv(dir / "steps.csv");
  csv.row({"step", "loss", "cosine", "peak_bytes", "elapsed_ns"});
  for (const StepRow& row : rep.rows) {
    csv.row({std::to_string(row.step), format_double(row.loss),
             row.has_cosine ? format_double(row.cosine) : "",
             format_size(row.peak_bytes), format_size(row.elapsed_ns)});
  }

  nlohmann::json summary{{"command", "train"},
                         {"method", method_name(rep.method)},
                         {"seed", cfg.seed},
                         {"steps", rep.rows.size()},
                         {"final_loss", rep.final_loss},
                         {"final_accuracy", rep.final_accuracy},
                         {"truncated", rep.truncated},
                         {"failure", rep.failure},
                         {"degenerate_events", rep.degenerate_events}};
  write_summary(dir, summary);
  if (rep.truncated) {
    std::fprintf(stderr, "agzo-lab: run truncated: %s\n",
                 rep.failure.c_str());
    return 2;
  }
  return 0;
}

int theory_bench(const ExperimentConfig& cfg,
                 const std::filesystem::path& dir) {
  if (cfg.diagnostics.grid.empty()) {
    throw config_error("diagnostics.grid must not be empty");
  }
  const SeedKey run{cfg.seed, 0};
  CsvFile csv(dir / "cosine.csv");
  csv.row({"config", "estimator", "d_out", "d_in", "r", "n_trials",
           "analytic", "mc_mean", "mc_stderr", "energy_ratio",
           "within_3se"});

  bool all_within = true;
  for (std::size_t i = 0; i < cfg.diagnostics.grid.size(); ++i) {
    const auto [d_out, d_in, r] = cfg.diagnostics.grid[i];
    if (r < 1 || r > d_in) {
      throw config_error("diagnostics.grid rank must satisfy 1 <= r <= d_in");
    }
    const Matrix g =
        gauss_matrix(fork(run, kTagObjective, i), d_out, d_in);
    const Matrix a =
        qr_orthonormal(gauss_matrix(fork(run, kTagSubspace, i), d_in, r)).q;

    const CosineReport sub =
        mc_cosine(g, &a, cfg.diagnostics.n_trials, fork(run, kTagTrial, 2 * i));
    const CosineReport dense = mc_cosine(g, nullptr, cfg.diagnostics.n_trials,
                                         fork(run, kTagTrial, 2 * i + 1));
    for (const auto* rep : {&sub, &dense}) {
      const bool within = std::abs(rep->mc_mean - rep->analytic_expectation) <=
                          3.0 * rep->mc_stderr;
      all_within = all_within && within;
      csv.row({std::to_string(i), rep == &sub ? "agzo" : "mezo",
               std::to_string(rep->d_out), std::to_string(rep->d_in),
               std::to_string(rep->r), std::to_string(rep->n_trials),
               format_double(rep->analytic_expectation),
               format_double(rep->mc_mean), format_double(rep->mc_stderr),
               format_double(rep->subspace_energy_ratio),
               within ? "1" : "0"});
    }
  }
  write_summary(dir, {{"command", "cosine-bench"},
                      {"mode", "theory"},
                      {"configs", cfg.diagnostics.grid.size()},
                      {"n_trials", cfg.diagnostics.n_trials},
                      {"all_within_3se", all_within}});
  return 0;
}

int training_bench(const ExperimentConfig& cfg,
                   const std::filesystem::path& dir) {
  if (cfg.cosine_every == 0 || cfg.steps == 0) {
    throw config_error(
        "training mode needs step.steps and step.cosine_every >= 1");
  }
  TrainPlan plan = experiment_plan(cfg);

  CsvFile csv(dir / "cosine.csv");
  csv.row({"step", "estimator", "cosine", "loss"});
  nlohmann::json summary{{"command", "cosine-bench"}, {"mode", "training"}};
  bool truncated = false;
  for (Method m : {Method::kAgzo, Method::kMezo}) {
    plan.step.method = m;
    const RunReport rep = train_loop(plan);
    truncated = truncated || rep.truncated;
    double sum = 0.0;
    std::size_t count = 0;
    for (const StepRow& row : rep.rows) {
      if (!row.has_cosine) continue;
      csv.row({std::to_string(row.step), method_name(m),
               format_double(row.cosine), format_double(row.loss)});
      sum += row.cosine;
      ++count;
    }
    summary[std::string("mean_cosine_") + method_name(m)] =
        count ? sum / static_cast<double>(count) : 0.0;
    summary[std::string("final_loss_") + method_name(m)] = rep.final_loss;
  }
  write_summary(dir, summary);
  return truncated ? 2 : 0;
}

int cmd_cosine_bench(const ExperimentConfig& cfg) {
  if (cfg.diagnostics.n_trials == 0) {
    throw config_error("diagnostics.n_trials must be >= 1");
  }
  if (cfg.diagnostics.mode != "theory" && cfg.diagnostics.mode != "training") {
    throw config_error("diagnostics.mode must be 'theory' or 'training'");
  }
  const std::filesystem::path dir = prepare_run_dir(cfg);
  return cfg.diagnostics.mode == "theory" ? theory_bench(cfg, dir)
                                          : training_bench(cfg, dir);
}

int cmd_beta_table(const ExperimentConfig& cfg) {
  if (cfg.diagnostics.beta_dims.empty()) {
    throw config_error("diagnostics.beta_dims must not be empty");
  }
  for (std::int64_t d : cfg.diagnostics.beta_dims) {
    if (d < 1) throw config_error("diagnostics.beta_dims entries must be >= 1");
  }
  const std::filesystem::path dir = prepare_run_dir(cfg);
  CsvFile csv(dir / "beta.csv");
  csv.row({"d", "beta", "lower", "upper", "ok"});
  bool all_ok = true;
  for (std::int64_t d : cfg.diagnostics.beta_dims) {
    if (d == 1) {
      csv.row({"1", format_double(beta(1)), "", "", ""});
      continue;
    }
    const BetaBounds b = beta_bounds_check(d);
    all_ok = all_ok && b.ok;
    csv.row({std::to_string(d), format_double(b.value),
             format_double(b.lower), format_double(b.upper),
             b.ok ? "1" : "0"});
  }
  write_summary(dir, {{"command", "beta-table"},
                      {"rows", cfg.diagnostics.beta_dims.size()},
                      {"all_ok", all_ok}});
  return 0;
}

int cmd_confinement(const ExperimentConfig& cfg) {
  const TrainPlan plan = experiment_plan(cfg);
  if (cfg.diagnostics.ranks.empty()) {
    throw config_error("diagnostics.ranks must not be empty");
  }
  const std::filesystem::path dir = prepare_run_dir(cfg);

  const SeedKey run{cfg.seed, 0};
  const SynthDataset data = synth_task(fork(run, kTagTask), plan.task);
  const ModelParams params = init_params(run, plan.model);
  const BatchSchedule sched(fork(run, kTagShuffle), data,
                            plan.task.batch_size);
  const Minibatch batch = sched.batch(0);

  const auto rows = confinement_profile(params, batch, cfg.diagnostics.ranks);
  CsvFile csv(dir / "confinement.csv");
  csv.row({"layer", "rank_requested", "rank_used", "cosine"});
  bool full_rank_ok = true;
  for (const ConfinementRow& row : rows) {
    csv.row({std::to_string(row.linear_layer),
             std::to_string(row.rank_requested),
             std::to_string(row.rank_used),
             row.defined ? format_double(row.cosine) : "undefined"});
    if (row.defined && row.rank_requested == 0) {
      full_rank_ok = full_rank_ok && std::abs(row.cosine - 1.0) <= 1e-6;
    }
  }

  ActivationCapture cap;
  forward_capture(params, batch, cap);
  CsvFile spectra(dir / "spectra.csv");
  spectra.row({"layer", "index", "sigma"});
  for (std::size_t li = 0; li < params.n_linear; ++li) {
    const std::vector<double> sigma = spectrum_dump(cap.h[li]);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      spectra.row({std::to_string(li), std::to_string(i),
                   format_double(sigma[i])});
    }
  }
  write_summary(dir, {{"command", "confinement"},
                      {"rows", rows.size()},
                      {"full_rank_ok", full_rank_ok}});
  return 0;
}

// One optimizer step under the ledger; the caller owns reset_peak timing.
double single_step(ModelParams& params, const Minibatch& batch,
                   StepConfig step, Method m, SeedKey key) {
  step.method = m;
  switch (m) {
    case Method::kMezo:
      return mezo_step(params, batch, step, key).f0;
    case Method::kLozo:
      return lozo_step(params, batch, step, key).f0;
    case Method::kAgzo:
      return agzo_step(params, batch, step, key).f0;
    case Method::kFo:
      return fo_step(params, batch, step.eta);
  }
  throw config_error("unknown method");
}

int cmd_memory_report(const ExperimentConfig& cfg) {
  if (cfg.diagnostics.batch_sizes.empty() || cfg.diagnostics.widths.empty()) {
    throw config_error(
        "memory-report needs diagnostics.batch_sizes and diagnostics.widths");
  }
  if (cfg.model.layer_dims.size() < 2) {
    throw config_error("missing required key: model.layer_dims");
  }
  std::vector<Method> methods;
  for (const std::string& name : cfg.diagnostics.methods) {
    methods.push_back(parse_method(name));
  }
  if (methods.empty()) throw config_error("diagnostics.methods is empty");

  const std::filesystem::path dir = prepare_run_dir(cfg);
  CsvFile csv(dir / "memory.csv");
  csv.row({"batch", "width", "mezo_peak", "lozo_peak", "agzo_peak", "fo_peak",
           "agzo_overhead_bound", "agzo_within_bound", "fo_exceeds_agzo"});

  const SeedKey run{cfg.seed, 0};
  bool all_within = true, all_fo_above = true;
  std::size_t point = 0;
  for (std::size_t batch_size : cfg.diagnostics.batch_sizes) {
    for (std::size_t width : cfg.diagnostics.widths) {
      // Hidden and input widths sweep together; the output stays configured.
      ModelSpec model = cfg.model;
      for (std::size_t i = 0; i + 1 < model.layer_dims.size(); ++i) {
        model.layer_dims[i] = width;
      }
      TaskSpec task = cfg.task;
      task.d_in = width;
      task.n_outputs = model.layer_dims.back();
      task.n_samples = batch_size;
      task.batch_size = batch_size;
      task.teacher_dims.clear();

      const SynthDataset data = synth_task(fork(run, kTagTask, point), task);
      const Minibatch batch{Matrix(data.inputs), Matrix(data.targets)};
      const SeedKey step_key = fork(run, kTagStep, point);

      std::uint64_t peak[4] = {0, 0, 0, 0};
      bool have[4] = {false, false, false, false};
      for (Method m : methods) {
        ModelParams params = init_params(run, model);
        ledger::reset_peak();
        single_step(params, batch, cfg.step, m, step_key);
        peak[static_cast<int>(m)] = ledger::snapshot().peak_bytes;
        have[static_cast<int>(m)] = true;
      }

      // Advertised AGZO overhead: the stored bases plus one activation held
      // during extraction.
      std::uint64_t bound = 0, max_h = 0;
      for (std::size_t li = 0; li + 1 < model.layer_dims.size(); ++li) {
        const std::size_t d_in = model.layer_dims[li];
        const std::size_t r =
            std::min({cfg.step.rank_for(li), d_in, batch_size});
        bound += d_in * r * 8;
        max_h = std::max<std::uint64_t>(max_h, d_in * batch_size * 8);
      }
      bound += max_h;

      const int kMezo = static_cast<int>(Method::kMezo);
      const int kLozo = static_cast<int>(Method::kLozo);
      const int kAgzo = static_cast<int>(Method::kAgzo);
      const int kFo = static_cast<int>(Method::kFo);

      std::string within, fo_above;
      if (have[kAgzo] && have[kMezo]) {
        const bool ok =
            peak[kAgzo] <= peak[kMezo] + bound;  // overhead within bound
        within = ok ? "1" : "0";
        all_within = all_within && ok;
      }
      if (have[kAgzo] && have[kFo]) {
        const bool ok = peak[kFo] > peak[kAgzo];
        fo_above = ok ? "1" : "0";
        all_fo_above = all_fo_above && ok;
      }
      csv.row({std::to_string(batch_size), std::to_string(width),
               have[kMezo] ? format_size(peak[kMezo]) : "",
               have[kLozo] ? format_size(peak[kLozo]) : "",
               have[kAgzo] ? format_size(peak[kAgzo]) : "",
               have[kFo] ? format_size(peak[kFo]) : "",
               format_size(bound), within, fo_above});
      ++point;
    }
  }
  write_summary(dir, {{"command", "memory-report"},
                      {"points", point},
                      {"all_within_bound", all_within},
                      {"all_fo_above", all_fo_above}});
  return 0;
}

}  // namespace
}  // namespace agzo

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order optimization laboratory"};
  app.require_subcommand(1);

  struct Cmd {
    CLI::App* sub;
    int (*run)(const agzo::ExperimentConfig&);
    std::string config_path;
    std::vector<std::string> sets;
  };
  std::vector<Cmd> cmds;
  const std::pair<const char*, int (*)(const agzo::ExperimentConfig&)>
      table[] = {{"train", agzo::cmd_train},
                 {"cosine-bench", agzo::cmd_cosine_bench},
                 {"beta-table", agzo::cmd_beta_table},
                 {"confinement", agzo::cmd_confinement},
                 {"memory-report", agzo::cmd_memory_report}};
  cmds.reserve(std::size(table));
  for (const auto& [name, fn] : table) {
    Cmd cmd;
    cmd.sub = app.add_subcommand(name);
    cmd.run = fn;
    cmds.push_back(cmd);
  }
  for (Cmd& cmd : cmds) {
    cmd.sub->add_option("--config", cmd.config_path, "JSON config file")
        ->required();
    cmd.sub->add_option("--set", cmd.sets,
                        "override a config key, e.g. --set step.mu=1e-6");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const Cmd& cmd : cmds) {
      if (cmd.sub->parsed()) {
        const agzo::ExperimentConfig cfg =
            agzo::load_config(cmd.config_path, cmd.sets);
        return cmd.run(cfg);
      }
    }
    std::fprintf(stderr, "agzo-lab: no command given\n");
    return 1;
  } catch (const agzo::numeric_error& e) {
    std::fprintf(stderr, "agzo-lab: numeric failure: %s\n", e.what());
    return 2;
  } catch (const agzo::invariant_error& e) {
    std::fprintf(stderr, "agzo-lab: invariant violated: %s\n", e.what());
    return 2;
  } catch (const agzo::error& e) {
    std::fprintf(stderr, "agzo-lab: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "agzo-lab: %s\n", e.what());
    return 2;
  }
}
