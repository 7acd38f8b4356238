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

#ifndef AGZO_MODEL_HPP_
#define AGZO_MODEL_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/matrix.hpp"
#include "agzo/rng.hpp"

namespace agzo {

// Small tanh MLPs. layer_dims = [d0, d1, ..., dL] gives L linear layers with
// tanh between them (none after the last). Bias vectors are stored as their
// own d x 1 parameter layers so the optimizers can treat every parameter
// block uniformly.

enum class Loss { kMse, kSoftmaxCrossEntropy };

struct ModelSpec {
  std::vector<std::size_t> layer_dims;
  Loss loss = Loss::kMse;
  bool bias = true;
  double init_scale = 1.0;
};

enum class LayerKind { kLinear, kBias };

struct Layer {
  LayerKind kind;
  std::size_t linear_index;  // which linear layer this block belongs to
  Matrix w;                  // d_out x d_in, or d_out x 1 for kBias
};

struct ModelParams {
  ModelSpec spec;
  std::vector<Layer> layers;
  std::size_t n_linear = 0;

  std::size_t d_in() const { return spec.layer_dims.front(); }
  std::size_t d_out() const { return spec.layer_dims.back(); }
};

// Weights ~ N(0, init_scale^2 / d_in) per layer, biases zero.
inline ModelParams init_params(SeedKey key, const ModelSpec& spec) {
  if (spec.layer_dims.size() < 2) {
    throw dimension_error("model needs at least [d_in, d_out]");
  }
  for (std::size_t d : spec.layer_dims) {
    if (d == 0) throw dimension_error("zero layer width");
  }
  ModelParams p;
  p.spec = spec;
  p.n_linear = spec.layer_dims.size() - 1;
  for (std::size_t l = 0; l < p.n_linear; ++l) {
    const std::size_t din = spec.layer_dims[l], dout = spec.layer_dims[l + 1];
    Matrix w = gauss_matrix(fork(key, kTagInit, l), dout, din);
    scale_inplace(w, spec.init_scale / std::sqrt(static_cast<double>(din)));
    p.layers.push_back(Layer{LayerKind::kLinear, l, std::move(w)});
    if (spec.bias) {
      p.layers.push_back(Layer{LayerKind::kBias, l, Matrix(dout, 1)});
    }
  }
  return p;
}

struct Minibatch {
  Matrix inputs;   // d_in x m
  Matrix targets;  // d_out x m (mse) or 1 x m class labels (cross-entropy)
};

// Called once per linear layer with that layer's input activation H_l
// (d_in(l) x m). The hook owns H_l; dropping it immediately is what keeps the
// forward pass at one live activation.
using LinearHook = std::function<void(std::size_t, Matrix&&)>;

namespace model_detail {

inline std::atomic<std::uint64_t> g_forward_calls{0};

inline void tanh_inplace(Matrix& z) {
  double* p = z.data();
  for (std::size_t i = 0, n = z.size(); i < n; ++i) p[i] = std::tanh(p[i]);
}

inline void add_bias(Matrix& z, const Matrix& b) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double bi = b(i, 0);
    double* row = z.data() + i * z.cols();
    for (std::size_t j = 0; j < z.cols(); ++j) row[j] += bi;
  }
}

inline void check_targets(const ModelParams& params, const Minibatch& batch) {
  if (batch.inputs.rows() != params.d_in()) {
    throw dimension_error("batch input width does not match the model");
  }
  if (params.spec.loss == Loss::kMse) {
    if (batch.targets.rows() != params.d_out() ||
        batch.targets.cols() != batch.inputs.cols()) {
      throw dimension_error("mse targets must be d_out x m");
    }
  } else {
    if (batch.targets.rows() != 1 ||
        batch.targets.cols() != batch.inputs.cols()) {
      throw dimension_error("class labels must be 1 x m");
    }
  }
}

// Mean-per-sample loss: mse sums squared error over output coordinates, then
// averages over the batch; cross-entropy averages -log softmax at the label.
inline double loss_value(const Matrix& out, const Matrix& targets, Loss loss) {
  const std::size_t m = out.cols();
  double acc = 0.0;
  if (loss == Loss::kMse) {
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double d = out(i, j) - targets(i, j);
        acc += d * d;
      }
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      double zmax = out(0, j);
      for (std::size_t i = 1; i < out.rows(); ++i)
        zmax = std::max(zmax, out(i, j));
      double lse = 0.0;
      for (std::size_t i = 0; i < out.rows(); ++i)
        lse += std::exp(out(i, j) - zmax);
      lse = zmax + std::log(lse);
      const auto label = static_cast<std::size_t>(targets(0, j));
      if (label >= out.rows()) throw domain_error("class label out of range");
      acc += lse - out(label, j);
    }
  }
  return acc / static_cast<double>(m);
}

// dLoss/dZ_L for the heads above.
inline Matrix loss_grad(const Matrix& out, const Matrix& targets, Loss loss) {
  const std::size_t m = out.cols();
  Matrix q(out.rows(), m);
  const double inv_m = 1.0 / static_cast<double>(m);
  if (loss == Loss::kMse) {
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < m; ++j)
        q(i, j) = 2.0 * inv_m * (out(i, j) - targets(i, j));
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      double zmax = out(0, j);
      for (std::size_t i = 1; i < out.rows(); ++i)
        zmax = std::max(zmax, out(i, j));
      double denom = 0.0;
      for (std::size_t i = 0; i < out.rows(); ++i)
        denom += std::exp(out(i, j) - zmax);
      for (std::size_t i = 0; i < out.rows(); ++i)
        q(i, j) = std::exp(out(i, j) - zmax) / denom * inv_m;
      const auto label = static_cast<std::size_t>(targets(0, j));
      q(label, j) -= inv_m;
    }
  }
  return q;
}

// Shared pass: runs the net on batch.inputs, optionally handing each linear
// input to `hook`, and leaves the final pre-loss output in `out`.
inline void run_net(const ModelParams& params, const Matrix& inputs,
                    const LinearHook* hook, Matrix& out) {
  Matrix x = inputs;
  std::size_t li = 0;
  for (std::size_t idx = 0; idx < params.layers.size(); ++idx) {
    const Layer& layer = params.layers[idx];
    if (layer.kind != LayerKind::kLinear) continue;
    Matrix z = multiply(layer.w, x);
    if (idx + 1 < params.layers.size() &&
        params.layers[idx + 1].kind == LayerKind::kBias) {
      add_bias(z, params.layers[idx + 1].w);
    }
    if (!all_finite(z)) {
      throw numeric_error(
          "non-finite activation at linear layer " + std::to_string(li),
          static_cast<int>(li));
    }
    if (hook) {
      (*hook)(li, std::move(x));
    }
    if (li + 1 < params.n_linear) tanh_inplace(z);
    x = std::move(z);
    ++li;
  }
  out = std::move(x);
}

}  // namespace model_detail

// Number of forward (loss-query) evaluations since process start. The
// zeroth-order steps are budgeted in these.
inline std::uint64_t forward_call_count() {
  return model_detail::g_forward_calls.load(std::memory_order_relaxed);
}

inline double forward(const ModelParams& params, const Minibatch& batch,
                      const LinearHook* hook = nullptr) {
  model_detail::check_targets(params, batch);
  model_detail::g_forward_calls.fetch_add(1, std::memory_order_relaxed);
  Matrix out;
  model_detail::run_net(params, batch.inputs, hook, out);
  const double loss =
      model_detail::loss_value(out, batch.targets, params.spec.loss);
  if (!std::isfinite(loss)) {
    throw numeric_error("non-finite loss at the output layer",
                        static_cast<int>(params.n_linear) - 1);
  }
  return loss;
}

// Final network output (pre-loss), for labeling tasks and evaluation.
inline Matrix model_output(const ModelParams& params, const Matrix& inputs) {
  Matrix out;
  model_detail::run_net(params, inputs, nullptr, out);
  return out;
}

struct ActivationCapture {
  std::vector<Matrix> h;  // h[l] = input activation of linear layer l
};

inline double forward_capture(const ModelParams& params,
                              const Minibatch& batch,
                              ActivationCapture& capture) {
  capture.h.assign(params.n_linear, Matrix());
  const LinearHook hook = [&capture](std::size_t li, Matrix&& h) {
    capture.h[li] = std::move(h);
  };
  return forward(params, batch, &hook);
}

struct LayerGradients {
  double loss = 0.0;
  std::vector<Matrix> g;  // aligned with ModelParams::layers
  std::vector<Matrix> q;  // per linear layer: dLoss/dZ_l (d_out(l) x m)
};

// Reverse-mode reference gradients. Keeps every H_l and Q_l alive at once by
// contract; the zeroth-order paths never allocate like this.
inline LayerGradients backprop_oracle(const ModelParams& params,
                                      const Minibatch& batch) {
  model_detail::check_targets(params, batch);
  ActivationCapture cap;
  cap.h.assign(params.n_linear, Matrix());
  Matrix out;
  {
    const LinearHook hook = [&cap](std::size_t li, Matrix&& h) {
      cap.h[li] = std::move(h);
    };
    model_detail::run_net(params, batch.inputs, &hook, out);
  }

  LayerGradients lg;
  lg.loss = model_detail::loss_value(out, batch.targets, params.spec.loss);
  lg.g.assign(params.layers.size(), Matrix());
  lg.q.assign(params.n_linear, Matrix());

  Matrix q = model_detail::loss_grad(out, batch.targets, params.spec.loss);
  out.release();

  for (std::size_t idx = params.layers.size(); idx-- > 0;) {
    const Layer& layer = params.layers[idx];
    if (layer.kind == LayerKind::kBias) {
      Matrix bg(layer.w.rows(), 1);
      for (std::size_t i = 0; i < q.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q.cols(); ++j) acc += q(i, j);
        bg(i, 0) = acc;
      }
      lg.g[idx] = std::move(bg);
      continue;
    }
    const std::size_t li = layer.linear_index;
    lg.g[idx] = multiply_bt(q, cap.h[li]);  // G_l = Q_l H_l^T
    lg.q[li] = q;
    if (li > 0) {
      Matrix t = multiply_at(layer.w, q);  // W^T Q
      // The input of this layer is tanh of the previous pre-activation, so
      // tanh' = 1 - h^2 elementwise.
      const Matrix& h = cap.h[li];
      for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
          t(i, j) *= 1.0 - h(i, j) * h(i, j);
      q = std::move(t);
    }
  }
  return lg;
}

}  // namespace agzo

#endif  // AGZO_MODEL_HPP_
