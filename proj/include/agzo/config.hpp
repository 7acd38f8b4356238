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

#ifndef AGZO_CONFIG_HPP_
#define AGZO_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agzo/errors.hpp"
#include "agzo/model.hpp"
#include "agzo/optimizers.hpp"
#include "agzo/task.hpp"

namespace agzo {

struct DiagnosticsConfig {
  std::size_t n_trials = 200000;
  std::string mode = "theory";  // cosine-bench: theory | training
  // (d_out, d_in, r) triples for the theory grid.
  std::vector<std::array<std::size_t, 3>> grid = {{8, 8, 1}, {32, 64, 4}};
  std::vector<std::size_t> ranks = {1, 2, 4, 8, 0};  // 0 = full rank
  std::vector<std::int64_t> beta_dims = {1, 2, 3, 4, 8, 64, 2048, 1000000};
  std::vector<std::size_t> batch_sizes;  // memory-report sweep
  std::vector<std::size_t> widths;       // memory-report sweep
  std::vector<std::string> methods = {"mezo", "lozo", "agzo", "fo"};
};

struct OutputConfig {
  std::string directory = "runs/out";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ModelSpec model;  // layer_dims stays empty until configured
  TaskSpec task;
  StepConfig step;
  std::size_t steps = 0;
  std::size_t cosine_every = 0;
  bool deterministic_timing = true;
  std::vector<double> eta_grid;
  DiagnosticsConfig diagnostics;
  OutputConfig output;
};

namespace config_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& section,
                           std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw config_error("unknown config key: " +
                         (section.empty() ? it.key() : section + "." +
                                                           it.key()));
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& section,
         T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("bad value for config key: " + section + "." + key);
  }
}

inline Loss parse_loss(const std::string& s) {
  if (s == "mse") return Loss::kMse;
  if (s == "cross_entropy") return Loss::kSoftmaxCrossEntropy;
  throw config_error("unknown loss '" + s + "'");
}

inline const char* loss_name(Loss loss) {
  return loss == Loss::kMse ? "mse" : "cross_entropy";
}

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "regression") return TaskKind::kRegression;
  if (s == "classification") return TaskKind::kClassification;
  throw config_error("unknown task kind '" + s + "'");
}

inline const char* task_kind_name(TaskKind kind) {
  return kind == TaskKind::kRegression ? "regression" : "classification";
}

inline const char* difference_name(Difference d) {
  return d == Difference::kForward ? "forward" : "central";
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  using config_detail::get_as;
  using config_detail::reject_unknown;
  if (!root.is_object()) throw config_error("config root must be an object");
  reject_unknown(root, "",
                 {"seed", "model", "task", "step", "diagnostics", "output"});

  ExperimentConfig cfg;
  cfg.seed = get_as<std::uint64_t>(root, "seed", "", 0);

  if (root.contains("model")) {
    const auto& m = root.at("model");
    reject_unknown(m, "model", {"layer_dims", "loss", "bias", "init_scale"});
    cfg.model.layer_dims = get_as<std::vector<std::size_t>>(
        m, "layer_dims", "model", {});
    cfg.model.loss = config_detail::parse_loss(
        get_as<std::string>(m, "loss", "model", "mse"));
    cfg.model.bias = get_as<bool>(m, "bias", "model", true);
    cfg.model.init_scale = get_as<double>(m, "init_scale", "model", 1.0);
  }

  if (root.contains("task")) {
    const auto& t = root.at("task");
    reject_unknown(t, "task",
                   {"kind", "n_samples", "d_in", "n_outputs", "batch_size",
                    "noise", "input_decay", "teacher_dims"});
    cfg.task.kind = config_detail::parse_task_kind(
        get_as<std::string>(t, "kind", "task", "classification"));
    cfg.task.n_samples = get_as<std::size_t>(t, "n_samples", "task", 0);
    cfg.task.d_in = get_as<std::size_t>(t, "d_in", "task", 0);
    cfg.task.n_outputs = get_as<std::size_t>(t, "n_outputs", "task", 0);
    cfg.task.batch_size = get_as<std::size_t>(t, "batch_size", "task", 0);
    cfg.task.noise = get_as<double>(t, "noise", "task", 0.0);
    cfg.task.input_decay = get_as<double>(t, "input_decay", "task", 0.0);
    cfg.task.teacher_dims =
        get_as<std::vector<std::size_t>>(t, "teacher_dims", "task", {});
  }

  if (root.contains("step")) {
    const auto& s = root.at("step");
    reject_unknown(s, "step",
                   {"method", "mu", "eta", "rank", "ranks", "power_steps",
                    "difference", "exact_restore", "scale_by_rank", "steps",
                    "cosine_every", "deterministic_timing", "eta_grid"});
    cfg.step.method =
        parse_method(get_as<std::string>(s, "method", "step", "mezo"));
    cfg.step.mu = get_as<double>(s, "mu", "step", cfg.step.mu);
    cfg.step.eta = get_as<double>(s, "eta", "step", cfg.step.eta);
    cfg.step.rank = get_as<std::size_t>(s, "rank", "step", cfg.step.rank);
    cfg.step.ranks =
        get_as<std::vector<std::size_t>>(s, "ranks", "step", {});
    cfg.step.power_steps =
        get_as<std::size_t>(s, "power_steps", "step", cfg.step.power_steps);
    cfg.step.difference = parse_difference(
        get_as<std::string>(s, "difference", "step", "forward"));
    cfg.step.exact_restore =
        get_as<bool>(s, "exact_restore", "step", false);
    cfg.step.agzo_scale_by_rank =
        get_as<bool>(s, "scale_by_rank", "step", false);
    cfg.steps = get_as<std::size_t>(s, "steps", "step", 0);
    cfg.cosine_every = get_as<std::size_t>(s, "cosine_every", "step", 0);
    cfg.deterministic_timing =
        get_as<bool>(s, "deterministic_timing", "step", true);
    cfg.eta_grid = get_as<std::vector<double>>(s, "eta_grid", "step", {});
  }

  if (root.contains("diagnostics")) {
    const auto& d = root.at("diagnostics");
    reject_unknown(d, "diagnostics",
                   {"n_trials", "mode", "grid", "ranks", "beta_dims",
                    "batch_sizes", "widths", "methods"});
    cfg.diagnostics.n_trials = get_as<std::size_t>(
        d, "n_trials", "diagnostics", cfg.diagnostics.n_trials);
    cfg.diagnostics.mode =
        get_as<std::string>(d, "mode", "diagnostics", cfg.diagnostics.mode);
    cfg.diagnostics.grid = get_as<std::vector<std::array<std::size_t, 3>>>(
        d, "grid", "diagnostics", cfg.diagnostics.grid);
    cfg.diagnostics.ranks = get_as<std::vector<std::size_t>>(
        d, "ranks", "diagnostics", cfg.diagnostics.ranks);
    cfg.diagnostics.beta_dims = get_as<std::vector<std::int64_t>>(
        d, "beta_dims", "diagnostics", cfg.diagnostics.beta_dims);
    cfg.diagnostics.batch_sizes = get_as<std::vector<std::size_t>>(
        d, "batch_sizes", "diagnostics", {});
    cfg.diagnostics.widths =
        get_as<std::vector<std::size_t>>(d, "widths", "diagnostics", {});
    cfg.diagnostics.methods = get_as<std::vector<std::string>>(
        d, "methods", "diagnostics", cfg.diagnostics.methods);
  }

  if (root.contains("output")) {
    const auto& o = root.at("output");
    reject_unknown(o, "output", {"directory"});
    cfg.output.directory = get_as<std::string>(o, "directory", "output",
                                               cfg.output.directory);
  }
  return cfg;
}

// Fully resolved config (every default materialized), used for the frozen
// snapshot each run directory receives.
inline nlohmann::json resolved_json(const ExperimentConfig& cfg) {
  using config_detail::json;
  json root;
  root["seed"] = cfg.seed;
  root["model"] = {{"layer_dims", cfg.model.layer_dims},
                   {"loss", config_detail::loss_name(cfg.model.loss)},
                   {"bias", cfg.model.bias},
                   {"init_scale", cfg.model.init_scale}};
  root["task"] = {
      {"kind", config_detail::task_kind_name(cfg.task.kind)},
      {"n_samples", cfg.task.n_samples},
      {"d_in", cfg.task.d_in},
      {"n_outputs", cfg.task.n_outputs},
      {"batch_size", cfg.task.batch_size},
      {"noise", cfg.task.noise},
      {"input_decay", cfg.task.input_decay},
      {"teacher_dims", cfg.task.teacher_dims}};
  root["step"] = {
      {"method", method_name(cfg.step.method)},
      {"mu", cfg.step.mu},
      {"eta", cfg.step.eta},
      {"rank", cfg.step.rank},
      {"ranks", cfg.step.ranks},
      {"power_steps", cfg.step.power_steps},
      {"difference", config_detail::difference_name(cfg.step.difference)},
      {"exact_restore", cfg.step.exact_restore},
      {"scale_by_rank", cfg.step.agzo_scale_by_rank},
      {"steps", cfg.steps},
      {"cosine_every", cfg.cosine_every},
      {"deterministic_timing", cfg.deterministic_timing},
      {"eta_grid", cfg.eta_grid}};
  root["diagnostics"] = {{"n_trials", cfg.diagnostics.n_trials},
                         {"mode", cfg.diagnostics.mode},
                         {"grid", cfg.diagnostics.grid},
                         {"ranks", cfg.diagnostics.ranks},
                         {"beta_dims", cfg.diagnostics.beta_dims},
                         {"batch_sizes", cfg.diagnostics.batch_sizes},
                         {"widths", cfg.diagnostics.widths},
                         {"methods", cfg.diagnostics.methods}};
  root["output"] = {{"directory", cfg.output.directory}};
  return root;
}

// Applies one `--set section.key=value` override onto the raw JSON tree.
// Values are parsed as JSON when possible (numbers, arrays, booleans) and
// fall back to plain strings.
inline void apply_override(nlohmann::json& root, const std::string& kv) {
  const std::size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw config_error("--set expects key=value, got '" + kv + "'");
  }
  const std::string path = kv.substr(0, eq);
  const std::string text = kv.substr(eq + 1);

  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw config_error("bad --set key '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// Reads, overrides, validates. Every config error carries the offending key.
inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& sets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  nlohmann::json root = nlohmann::json::parse(buf.str(), nullptr, false);
  if (root.is_discarded()) {
    throw config_error("config file " + path + " is not valid JSON");
  }
  for (const std::string& kv : sets) apply_override(root, kv);
  return parse_config(root);
}

// Train-style commands need a full model/task/step; missing pieces are
// reported by key path.
inline TrainPlan experiment_plan(const ExperimentConfig& cfg) {
  if (cfg.model.layer_dims.size() < 2) {
    throw config_error("missing required key: model.layer_dims");
  }
  TrainPlan plan;
  plan.model = cfg.model;
  plan.task = cfg.task;
  if (plan.task.d_in == 0) plan.task.d_in = cfg.model.layer_dims.front();
  if (plan.task.n_outputs == 0) {
    plan.task.n_outputs = cfg.model.layer_dims.back();
  }
  if (plan.task.n_samples == 0) {
    throw config_error("missing required key: task.n_samples");
  }
  if (plan.task.batch_size == 0) {
    throw config_error("missing required key: task.batch_size");
  }
  plan.step = cfg.step;
  plan.seed = cfg.seed;
  plan.steps = cfg.steps;
  plan.cosine_every = cfg.cosine_every;
  plan.deterministic_timing = cfg.deterministic_timing;
  return plan;
}

}  // namespace agzo

#endif  // AGZO_CONFIG_HPP_
