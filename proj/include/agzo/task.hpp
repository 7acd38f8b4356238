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

#ifndef AGZO_TASK_HPP_
#define AGZO_TASK_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/matrix.hpp"
#include "agzo/model.hpp"
#include "agzo/rng.hpp"

namespace agzo {

// Teacher-student data: a frozen random tanh MLP labels Gaussian inputs.
// input_decay shapes the input covariance spectrum (coordinate i is scaled by
// (i+1)^-decay); decaying spectra give the low-dimensional activation
// structure the subspace experiments are about, decay 0 keeps inputs white.
// Classification teachers carry no bias, which makes argmax labels exactly
// balanced in distribution for these odd nonlinearities.

enum class TaskKind { kRegression, kClassification };

struct TaskSpec {
  TaskKind kind = TaskKind::kClassification;
  std::size_t n_samples = 0;
  std::size_t d_in = 0;
  std::size_t n_outputs = 0;  // classes, or regression output width
  std::size_t batch_size = 0;
  double noise = 0.0;
  double input_decay = 0.0;
  std::vector<std::size_t> teacher_dims;  // first = d_in, last = n_outputs
};

struct SynthDataset {
  TaskSpec spec;
  Matrix inputs;   // d_in x n
  Matrix targets;  // n_outputs x n, or 1 x n labels
};

inline SynthDataset synth_task(SeedKey key, const TaskSpec& spec) {
  if (spec.n_samples == 0 || spec.d_in == 0 || spec.n_outputs == 0) {
    throw config_error("synth_task: n_samples, d_in, n_outputs must be >= 1");
  }
  if (spec.kind == TaskKind::kClassification && spec.n_outputs < 2) {
    throw config_error("synth_task: classification needs >= 2 classes");
  }
  std::vector<std::size_t> tdims = spec.teacher_dims;
  if (tdims.empty()) tdims = {spec.d_in, spec.n_outputs};
  if (tdims.front() != spec.d_in || tdims.back() != spec.n_outputs) {
    throw config_error("synth_task: teacher dims must span d_in -> n_outputs");
  }

  SynthDataset data;
  data.spec = spec;
  data.inputs = gauss_matrix(fork(key, kTagInputs), spec.d_in, spec.n_samples);
  if (spec.input_decay != 0.0) {
    for (std::size_t i = 0; i < spec.d_in; ++i) {
      const double s = std::pow(static_cast<double>(i + 1), -spec.input_decay);
      double* row = data.inputs.data() + i * spec.n_samples;
      for (std::size_t j = 0; j < spec.n_samples; ++j) row[j] *= s;
    }
  }

  ModelSpec tspec;
  tspec.layer_dims = tdims;
  tspec.bias = false;
  tspec.init_scale = 1.0;
  const ModelParams teacher = init_params(fork(key, kTagTeacher), tspec);
  Matrix out = model_output(teacher, data.inputs);

  if (spec.noise != 0.0) {
    Matrix eps =
        gauss_matrix(fork(key, kTagNoise), out.rows(), out.cols());
    axpy(out, spec.noise, eps);
  }

  if (spec.kind == TaskKind::kRegression) {
    data.targets = std::move(out);
  } else {
    Matrix labels(1, spec.n_samples);
    for (std::size_t j = 0; j < spec.n_samples; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < out.rows(); ++i)
        if (out(i, j) > out(best, j)) best = i;
      labels(0, j) = static_cast<double>(best);
    }
    data.targets = std::move(labels);
  }
  return data;
}

// Deterministic round-robin over one fixed shuffle of the sample indices.
class BatchSchedule {
 public:
  BatchSchedule(SeedKey key, const SynthDataset& data, std::size_t batch_size)
      : data_(&data), batch_size_(batch_size) {
    const std::size_t n = data.spec.n_samples;
    if (batch_size == 0 || batch_size > n) {
      throw config_error("batch_size must be in [1, n_samples]");
    }
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<uint32_t>(i);
    NormalStream words(key);
    std::uint64_t k = 0;
    for (std::size_t i = n; i-- > 1;) {
      const std::uint64_t j = words.word(k++) % (i + 1);
      std::swap(perm_[i], perm_[j]);
    }
  }

  std::size_t n_batches() const {
    return data_->spec.n_samples / batch_size_;
  }

  Minibatch batch(std::size_t step) const {
    const std::size_t b = step % n_batches();
    const std::size_t first = b * batch_size_;
    const Matrix& x = data_->inputs;
    const Matrix& t = data_->targets;
    Minibatch mb{Matrix(x.rows(), batch_size_), Matrix(t.rows(), batch_size_)};
    for (std::size_t j = 0; j < batch_size_; ++j) {
      const std::size_t src = perm_[first + j];
      for (std::size_t i = 0; i < x.rows(); ++i)
        mb.inputs(i, j) = x(i, src);
      for (std::size_t i = 0; i < t.rows(); ++i)
        mb.targets(i, j) = t(i, src);
    }
    return mb;
  }

 private:
  const SynthDataset* data_;
  std::size_t batch_size_;
  std::vector<std::uint32_t> perm_;
};

}  // namespace agzo

#endif  // AGZO_TASK_HPP_
