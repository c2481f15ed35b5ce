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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esfl/rng.hpp"

namespace esfl::toy {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  // Rows [begin, end) as a new matrix.
  Matrix slice_rows(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };
enum class Loss { kSoftmaxCrossEntropy, kSquaredError };

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t inputs() const { return weight.cols(); }
  std::size_t outputs() const { return weight.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct DenseNet {
  std::vector<DenseLayer> layers;
  Loss loss = Loss::kSquaredError;

  std::size_t parameter_count() const;
  friend bool operator==(const DenseNet&, const DenseNet&) = default;
};

// Inputs one sample per row; targets are one-hot rows for classification.
struct Batch {
  Matrix x;
  Matrix y;
};

// A network cut after layer `cut`: layers 1..cut on the user, the rest on
// the server. cut == L leaves the server with only the loss.
struct SplitState {
  DenseNet user_side;
  DenseNet server_side;
  int cut = 0;
  double learning_rate = 0.0;
};

// Gradient of the mean batch loss for every layer.
struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;
};

// Throws ShapeError on inconsistent layer dimensions.
void validate(const DenseNet& net);

// Random network with the given layer widths (dims.size() - 1 layers).
DenseNet make_dense_net(std::span<const std::size_t> dims,
                        std::span<const Activation> activations, Loss loss, Rng& rng);

Matrix forward(const DenseNet& net, const Matrix& x);
double loss_value(const DenseNet& net, const Batch& batch);
std::vector<LayerGradient> gradients(const DenseNet& net, const Batch& batch,
                                     double* loss = nullptr);

std::vector<double> flatten_parameters(const DenseNet& net);
void assign_parameters(DenseNet& net, std::span<const double> params);

// Throws ShapeError unless 1 <= cut <= L.
SplitState split(const DenseNet& net, int cut, double learning_rate);
DenseNet concatenate(const SplitState& state);

// One SGD step executed the split way: user forward to the cut activation,
// server forward/loss/backward and update, activation gradient returned to
// the user, user backward and update. Returns the batch loss.
// Throws ShapeError on dimension mismatch, NumericError on non-finite data or loss.
double split_update(SplitState& state, const Batch& batch);

// Plain full-network SGD step. Returns the batch loss.
double monolithic_update(DenseNet& net, const Batch& batch, double learning_rate);

struct LocalModel {
  const DenseNet* net = nullptr;
  double samples = 0.0;
};

// W <- W - eta * (W - sum_i n_i W_i / N), evaluated as
// (1 - eta) W + eta * sum_i (n_i / N) W_i.
DenseNet federated_aggregate(const DenseNet& global, std::span<const LocalModel> locals,
                             double eta);

struct ToyUser {
  Batch data;
  int cut = 1;
  int epochs = 1;
};

struct ToyTrainConfig {
  int rounds = 10;
  double eta = 0.5;
  double rho0 = 0.01;
  // rho_r = rho0 / (1 + r / rho_decay_rounds), r counted from 0.
  double rho_decay_rounds = 100.0;
  std::size_t batch_size = 32;
};

struct ToyTrainResult {
  DenseNet model;
  // Mean loss of the global model over all users' data, before training
  // and after each round.
  std::vector<double> loss_trace;
};

double learning_rate_at(const ToyTrainConfig& cfg, int round);

ToyTrainResult esfl_train(const DenseNet& initial, std::span<const ToyUser> users,
                          const ToyTrainConfig& cfg);

// max_k |a_k - b_k| / max(|a_k|, |b_k|), zero where both are zero.
// Throws ShapeError on a length mismatch.
double max_relative_deviation(std::span<const double> a, std::span<const double> b);

struct EquivalenceSummary {
  int cases = 0;
  double max_relative_deviation = 0.0;
};

// Random nets of 1 to 4 layers, random cut, batch and rate: one split step
// against one monolithic step from the same start.
EquivalenceSummary check_split_equivalence(int cases, Rng& rng);

// Class centers drawn uniformly in [-range, range]^dim, one per row.
Matrix make_blob_centers(std::size_t classes, std::size_t dim, double range, Rng& rng);

// Isotropic Gaussian samples around the centers, classes drawn uniformly,
// one-hot targets.
Batch make_blobs(std::size_t samples, const Matrix& centers, double spread, Rng& rng);

}  // namespace esfl::toy
