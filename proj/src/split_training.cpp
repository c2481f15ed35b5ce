/*
 * Copyright 2026 The ESFL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "esfl/split_training.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "esfl/errors.hpp"

namespace esfl::toy {

namespace {

struct LayerCache {
  Matrix input;
  Matrix pre;  // W x + b
  Matrix out;  // activation(pre)
};

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative given the pre-activation and the activated value.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

Matrix layer_forward(const DenseLayer& layer, const Matrix& x, LayerCache* cache) {
  if (x.cols() != layer.inputs()) {
    throw ShapeError("layer expects " + std::to_string(layer.inputs()) +
                     " inputs, got " + std::to_string(x.cols()));
  }
  const std::size_t n = x.rows(), in = layer.inputs(), out = layer.outputs();
  Matrix pre(n, out);
  Matrix y(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) s += layer.weight(o, i) * x(r, i);
      pre(r, o) = s;
      y(r, o) = activate(layer.activation, s);
    }
  }
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->out = y;
  }
  return y;
}

// Backpropagates d(loss)/d(out) through one layer; returns d(loss)/d(input).
Matrix layer_backward(const DenseLayer& layer, const LayerCache& cache,
                      const Matrix& grad_out, LayerGradient& grad) {
  const std::size_t n = cache.input.rows(), in = layer.inputs(), out = layer.outputs();
  Matrix dz(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      dz(r, o) = grad_out(r, o) *
                 activate_grad(layer.activation, cache.pre(r, o), cache.out(r, o));
    }
  }
  grad.weight = Matrix(out, in);
  grad.bias.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t r = 0; r < n; ++r) {
      grad.bias[o] += dz(r, o);
      for (std::size_t i = 0; i < in; ++i) grad.weight(o, i) += dz(r, o) * cache.input(r, i);
    }
  }
  Matrix dx(n, in);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < out; ++o) s += dz(r, o) * layer.weight(o, i);
      dx(r, i) = s;
    }
  }
  return dx;
}

Matrix run_forward(std::span<const DenseLayer> layers, Matrix x,
                   std::vector<LayerCache>* caches) {
  if (caches) caches->resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = layer_forward(layers[l], x, caches ? &(*caches)[l] : nullptr);
  }
  return x;
}

Matrix run_backward(std::span<const DenseLayer> layers,
                    const std::vector<LayerCache>& caches, Matrix grad,
                    std::vector<LayerGradient>& grads) {
  grads.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grad = layer_backward(layers[l], caches[l], grad, grads[l]);
  }
  return grad;
}

void apply_sgd(std::span<DenseLayer> layers, const std::vector<LayerGradient>& grads,
               double rate) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.values();
    auto gw = grads[l].weight.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= rate * gw[k];
    for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
      layers[l].bias[k] -= rate * grads[l].bias[k];
    }
  }
}

// Mean loss over the batch and its gradient with respect to the output.
double loss_and_grad(Loss loss, const Matrix& output, const Matrix& target,
                     Matrix* grad) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ShapeError("target shape does not match network output");
  }
  const std::size_t n = output.rows(), k = output.cols();
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  if (grad) *grad = Matrix(n, k);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (loss == Loss::kSquaredError) {
      for (std::size_t c = 0; c < k; ++c) {
        const double d = output(r, c) - target(r, c);
        total += d * d;
        if (grad) (*grad)(r, c) = 2.0 * d * inv_n;
      }
    } else {
      double zmax = output(r, 0);
      for (std::size_t c = 1; c < k; ++c) zmax = std::max(zmax, output(r, c));
      double denom = 0.0;
      for (std::size_t c = 0; c < k; ++c) denom += std::exp(output(r, c) - zmax);
      const double log_denom = std::log(denom);
      for (std::size_t c = 0; c < k; ++c) {
        const double log_p = output(r, c) - zmax - log_denom;
        total -= target(r, c) * log_p;
        if (grad) (*grad)(r, c) = (std::exp(log_p) - target(r, c)) * inv_n;
      }
    }
  }
  const double value = total * inv_n;
  if (!std::isfinite(value)) throw NumericError("non-finite loss");
  return value;
}

void check_batch(const Batch& batch) {
  if (batch.x.rows() != batch.y.rows()) {
    throw ShapeError("inputs and targets have different sample counts");
  }
  if (batch.x.rows() == 0) throw ShapeError("empty batch");
  auto finite = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(batch.x.values()) || !finite(batch.y.values())) {
    throw NumericError("batch contains non-finite values");
  }
}

}  // namespace

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  end = std::min(end, rows_);
  begin = std::min(begin, end);
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_),
            out.data_.begin());
  return out;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.values().size() + l.bias.size();
  return n;
}

void validate(const DenseNet& net) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (layer.bias.size() != layer.outputs()) {
      throw ShapeError("bias size mismatch in layer " + std::to_string(l + 1));
    }
    if (l > 0 && layer.inputs() != net.layers[l - 1].outputs()) {
      throw ShapeError("layer " + std::to_string(l + 1) +
                       " input width does not match previous output");
    }
  }
}

DenseNet make_dense_net(std::span<const std::size_t> dims,
                        std::span<const Activation> activations, Loss loss, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw ShapeError("need one activation per layer and at least one layer");
  }
  DenseNet net;
  net.loss = loss;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(dims[l + 1], dims[l]);
    const double scale = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (auto& w : layer.weight.values()) w = rng.uniform(-scale, scale);
    layer.bias.resize(dims[l + 1]);
    for (auto& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix forward(const DenseNet& net, const Matrix& x) {
  return run_forward(net.layers, x, nullptr);
}

double loss_value(const DenseNet& net, const Batch& batch) {
  check_batch(batch);
  return loss_and_grad(net.loss, forward(net, batch.x), batch.y, nullptr);
}

std::vector<LayerGradient> gradients(const DenseNet& net, const Batch& batch,
                                     double* loss) {
  check_batch(batch);
  std::vector<LayerCache> caches;
  const Matrix out = run_forward(net.layers, batch.x, &caches);
  Matrix grad;
  const double value = loss_and_grad(net.loss, out, batch.y, &grad);
  if (loss) *loss = value;
  std::vector<LayerGradient> grads;
  run_backward(net.layers, caches, std::move(grad), grads);
  return grads;
}

std::vector<double> flatten_parameters(const DenseNet& net) {
  std::vector<double> out;
  out.reserve(net.parameter_count());
  for (const auto& l : net.layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void assign_parameters(DenseNet& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) {
    throw ShapeError("parameter vector has the wrong length");
  }
  std::size_t k = 0;
  for (auto& l : net.layers) {
    for (auto& w : l.weight.values()) w = params[k++];
    for (auto& b : l.bias) b = params[k++];
  }
}

SplitState split(const DenseNet& net, int cut, double learning_rate) {
  const int L = static_cast<int>(net.layers.size());
  if (cut < 1 || cut > L) {
    throw ShapeError("cut " + std::to_string(cut) + " outside [1, " +
                     std::to_string(L) + "]");
  }
  SplitState s;
  s.cut = cut;
  s.learning_rate = learning_rate;
  s.user_side.loss = net.loss;
  s.server_side.loss = net.loss;
  s.user_side.layers.assign(net.layers.begin(), net.layers.begin() + cut);
  s.server_side.layers.assign(net.layers.begin() + cut, net.layers.end());
  return s;
}

DenseNet concatenate(const SplitState& state) {
  DenseNet net;
  net.loss = state.server_side.loss;
  net.layers = state.user_side.layers;
  net.layers.insert(net.layers.end(), state.server_side.layers.begin(),
                    state.server_side.layers.end());
  return net;
}

double split_update(SplitState& state, const Batch& batch) {
  check_batch(batch);
  // User: forward to the cut activation.
  std::vector<LayerCache> user_caches;
  const Matrix activation = run_forward(state.user_side.layers, batch.x, &user_caches);

  // Server: receives (activation, labels), finishes the forward pass and
  // backpropagates down to the activation.
  std::vector<LayerCache> server_caches;
  const Matrix output = run_forward(state.server_side.layers, activation, &server_caches);
  Matrix grad_out;
  const double loss = loss_and_grad(state.server_side.loss, output, batch.y, &grad_out);
  std::vector<LayerGradient> server_grads;
  const Matrix activation_grad = run_backward(state.server_side.layers, server_caches,
                                              std::move(grad_out), server_grads);
  apply_sgd(state.server_side.layers, server_grads, state.learning_rate);

  // User: receives the activation gradient and updates its layers.
  std::vector<LayerGradient> user_grads;
  run_backward(state.user_side.layers, user_caches, activation_grad, user_grads);
  apply_sgd(state.user_side.layers, user_grads, state.learning_rate);
  return loss;
}

double monolithic_update(DenseNet& net, const Batch& batch, double learning_rate) {
  double loss = 0.0;
  const auto grads = gradients(net, batch, &loss);
  apply_sgd(net.layers, grads, learning_rate);
  return loss;
}

DenseNet federated_aggregate(const DenseNet& global, std::span<const LocalModel> locals,
                             double eta) {
  if (locals.empty()) throw ShapeError("no local models to aggregate");
  double total = 0.0;
  for (const auto& m : locals) {
    if (!m.net || !(m.samples > 0.0)) {
      throw ShapeError("local models need a network and a positive sample count");
    }
    if (m.net->parameter_count() != global.parameter_count() ||
        m.net->layers.size() != global.layers.size()) {
      throw ShapeError("local model structure differs from the global model");
    }
    for (std::size_t l = 0; l < global.layers.size(); ++l) {
      if (m.net->layers[l].weight.rows() != global.layers[l].weight.rows() ||
          m.net->layers[l].weight.cols() != global.layers[l].weight.cols()) {
        throw ShapeError("local model structure differs from the global model");
      }
    }
    total += m.samples;
  }

  const auto base = flatten_parameters(global);
  std::vector<double> mean(base.size(), 0.0);
  for (const auto& m : locals) {
    const double w = m.samples / total;
    const auto p = flatten_parameters(*m.net);
    for (std::size_t k = 0; k < p.size(); ++k) mean[k] += w * p[k];
  }
  std::vector<double> next(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    next[k] = (1.0 - eta) * base[k] + eta * mean[k];
  }
  DenseNet out = global;
  assign_parameters(out, next);
  return out;
}

double learning_rate_at(const ToyTrainConfig& cfg, int round) {
  return cfg.rho0 / (1.0 + static_cast<double>(round) / cfg.rho_decay_rounds);
}

ToyTrainResult esfl_train(const DenseNet& initial, std::span<const ToyUser> users,
                          const ToyTrainConfig& cfg) {
  validate(initial);
  if (users.empty()) throw ShapeError("no users");
  if (cfg.batch_size == 0) throw ShapeError("batch size must be positive");

  auto mean_loss = [&](const DenseNet& net) {
    double weighted = 0.0, n = 0.0;
    for (const auto& u : users) {
      const double rows = static_cast<double>(u.data.x.rows());
      weighted += rows * loss_value(net, u.data);
      n += rows;
    }
    return weighted / n;
  };

  ToyTrainResult result;
  result.model = initial;
  result.loss_trace.push_back(mean_loss(initial));
  for (int r = 0; r < cfg.rounds; ++r) {
    const double rho = learning_rate_at(cfg, r);
    std::vector<DenseNet> trained;
    trained.reserve(users.size());
    for (const auto& u : users) {
      check_batch(u.data);
      SplitState state = split(result.model, u.cut, rho);
      const std::size_t n = u.data.x.rows();
      for (int e = 0; e < u.epochs; ++e) {
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
          const Batch mb{u.data.x.slice_rows(begin, begin + cfg.batch_size),
                         u.data.y.slice_rows(begin, begin + cfg.batch_size)};
          split_update(state, mb);
        }
      }
      trained.push_back(concatenate(state));
    }
    std::vector<LocalModel> locals;
    for (std::size_t i = 0; i < users.size(); ++i) {
      locals.push_back({&trained[i], static_cast<double>(users[i].data.x.rows())});
    }
    result.model = federated_aggregate(result.model, locals, cfg.eta);
    result.loss_trace.push_back(mean_loss(result.model));
  }
  return result;
}

double max_relative_deviation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("parameter vectors differ in length");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

EquivalenceSummary check_split_equivalence(int cases, Rng& rng) {
  constexpr Activation kActs[] = {Activation::kIdentity, Activation::kRelu,
                                  Activation::kTanh, Activation::kSigmoid};
  EquivalenceSummary out;
  for (int c = 0; c < cases; ++c) {
    Rng r = rng.split(static_cast<std::uint64_t>(c));
    const std::size_t layers = 1 + r.uniform_index(4);
    std::vector<std::size_t> dims;
    for (std::size_t l = 0; l <= layers; ++l) dims.push_back(1 + r.uniform_index(6));
    std::vector<Activation> acts;
    for (std::size_t l = 0; l < layers; ++l) acts.push_back(kActs[r.uniform_index(4)]);
    const Loss loss = r.uniform_index(2) == 0 ? Loss::kSoftmaxCrossEntropy
                                              : Loss::kSquaredError;
    DenseNet net = make_dense_net(dims, acts, loss, r);
    const std::size_t n = 1 + r.uniform_index(8);
    Batch batch{Matrix(n, dims.front()), Matrix(n, dims.back())};
    for (auto& v : batch.x.values()) v = r.normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (loss == Loss::kSoftmaxCrossEntropy) {
        batch.y(i, r.uniform_index(dims.back())) = 1.0;
      } else {
        for (std::size_t k = 0; k < dims.back(); ++k) batch.y(i, k) = r.normal(0.0, 1.0);
      }
    }
    const double rho = r.uniform(0.0, 0.5);
    const int cut = 1 + static_cast<int>(r.uniform_index(layers));

    SplitState state = split(net, cut, rho);
    split_update(state, batch);
    monolithic_update(net, batch, rho);
    out.max_relative_deviation =
        std::max(out.max_relative_deviation,
                 max_relative_deviation(flatten_parameters(concatenate(state)),
                                        flatten_parameters(net)));
    ++out.cases;
  }
  return out;
}

Matrix make_blob_centers(std::size_t classes, std::size_t dim, double range, Rng& rng) {
  Matrix c(classes, dim);
  for (auto& v : c.values()) v = rng.uniform(-range, range);
  return c;
}

Batch make_blobs(std::size_t samples, const Matrix& centers, double spread, Rng& rng) {
  const std::size_t classes = centers.rows(), dim = centers.cols();
  Batch b{Matrix(samples, dim), Matrix(samples, classes)};
  for (std::size_t r = 0; r < samples; ++r) {
    const std::size_t k = rng.uniform_index(classes);
    for (std::size_t d = 0; d < dim; ++d) b.x(r, d) = centers(k, d) + rng.normal(0.0, spread);
    b.y(r, k) = 1.0;
  }
  return b;
}

}  // namespace esfl::toy
