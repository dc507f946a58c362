// Copyright 2026 The cowclip-lab Authors.
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

#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cowclip/data.hpp"
#include "cowclip/embedding.hpp"

namespace cowclip {

// Two-stream CTR models. Every kind shares the deep stream, an MLP over
// [embeddings, dense features]; the second stream is
//   kWideDeep  logistic regression over the one-hot ids
//   kDeepFM    logistic regression plus the FM pairwise term on embeddings
//   kDCN       cross layers x_{l+1} = x0 (x_l . w_l) + b_l + x_l
//   kDCNv2     cross layers x_{l+1} = x0 * (W_l x_l + b_l) + x_l
// Dense features never enter the wide or cross stream.
enum class ModelKind { kWideDeep, kDeepFM, kDCN, kDCNv2 };

ModelKind parse_model_kind(std::string_view name);
std::string to_string(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::kDeepFM;
  std::vector<int> hidden{400, 400, 400};
  int cross_depth = 3;
  int embed_dim = 10;
};

// All dense tensors are MatrixXd; bias rows are (1 x n).
struct DenseParams {
  std::vector<Eigen::MatrixXd> mlp_w;    // (fan_in x fan_out); the last maps to one unit
  std::vector<Eigen::MatrixXd> mlp_b;    // (1 x fan_out)
  std::vector<Eigen::MatrixXd> cross_w;  // DCN: (D x 1), DCNv2: (D x D)
  std::vector<Eigen::MatrixXd> cross_b;  // (1 x D)
  Eigen::MatrixXd cross_out;             // (D x 1), empty for wide models
  Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(1, 1);

  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;
  std::vector<std::string> tensor_names() const;
  DenseParams zeros_like() const;
  bool operator==(const DenseParams& other) const;
};

struct Model {
  ModelConfig config;
  DenseParams dense;
  EmbeddingTable embeddings;
  // Per-id logistic-regression weights as a dim-1 table (W&D and DeepFM).
  EmbeddingTable wide;

  bool has_wide() const { return config.kind == ModelKind::kWideDeep || config.kind == ModelKind::kDeepFM; }
  bool has_cross() const { return config.kind == ModelKind::kDCN || config.kind == ModelKind::kDCNv2; }
};

// Kaiming (fan-in, normal) dense weights, zero biases, zero LR weights and
// Normal(0, init_sigma) embeddings.
Model init_model(const ModelConfig& config, std::span<const std::int64_t> vocab_sizes,
                 std::size_t n_dense, double init_sigma, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Building blocks

struct MlpCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // affine outputs per layer
  std::vector<Eigen::MatrixXd> post;  // ReLU outputs of hidden layers
};

// Affine + ReLU stack ending in a linear unit; returns one logit per row.
Eigen::VectorXd mlp_forward(std::span<const Eigen::MatrixXd> weights,
                            std::span<const Eigen::MatrixXd> biases, const Eigen::MatrixXd& input,
                            MlpCache* cache);

// `upstream` is the per-row derivative of the loss w.r.t. the logit. Parameter
// gradients are scaled by `param_scale` (1/b for a batch mean); the returned
// input gradient is per-row and unscaled.
Eigen::MatrixXd mlp_backward(std::span<const Eigen::MatrixXd> weights, const MlpCache& cache,
                             const Eigen::VectorXd& upstream, double param_scale,
                             std::span<Eigen::MatrixXd> grad_w, std::span<Eigen::MatrixXd> grad_b);

// w0 + sum over fields of the selected id weight.
Eigen::VectorXd lr_head(double bias, const EmbeddingTable& wide, const LookupRecord& record);

// sum_{i<j} <v_i, v_j> per row via (|sum v|^2 - sum |v|^2) / 2.
Eigen::VectorXd fm_pairwise(const Eigen::MatrixXd& embedded, int n_fields, int dim);
// d(pairwise)/d(v_i) = sum v - v_i, scaled per row by upstream.
Eigen::MatrixXd fm_pairwise_backward(const Eigen::MatrixXd& embedded, int n_fields, int dim,
                                     const Eigen::VectorXd& upstream);

struct CrossGrad {
  Eigen::MatrixXd d_x0;
  Eigen::MatrixXd d_xl;
  Eigen::MatrixXd d_w;  // summed over rows
  Eigen::MatrixXd d_b;  // (1 x D), summed over rows
};

// Rows are samples. `w` is (D x 1).
Eigen::MatrixXd dcn_cross_layer(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                                const Eigen::MatrixXd& w, const Eigen::MatrixXd& b);
CrossGrad dcn_cross_backward(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                             const Eigen::MatrixXd& w, const Eigen::MatrixXd& d_out);

// `w` is (D x D), applied as W x_l per row.
Eigen::MatrixXd dcnv2_cross_layer(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                                  const Eigen::MatrixXd& w, const Eigen::MatrixXd& b);
CrossGrad dcnv2_cross_backward(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                               const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& d_out);

// ---------------------------------------------------------------------------
// Whole model

struct ForwardCache {
  LookupRecord lookup;
  Eigen::MatrixXd embedded;
  MlpCache mlp;
  std::vector<Eigen::MatrixXd> cross_x;  // x_0 .. x_L
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
};

struct ForwardResult {
  Eigen::VectorXd probs;
  ForwardCache cache;
};

ForwardResult model_forward(const Model& model, const Dataset& dataset, const Batch& batch);

Eigen::VectorXd batch_labels(const Dataset& dataset, const Batch& batch);

enum class L2Scope { kNone, kEmbeddings, kAll };

struct ModelGradients {
  double loss = 0.0;  // mean logloss plus the in-scope L2 penalty
  DenseParams dense;
  SparseGradient embeddings;
  SparseGradient wide;
};

// Mean binary cross-entropy on probabilities clamped to [eps, 1 - eps] plus
// (lambda/2)|w|^2 over in-scope tensors, whose gradients receive lambda * w.
// Embedding-table penalties cover whole tables; their gradient entries exist
// only for touched columns.
ModelGradients loss_and_backward(const Model& model, const ForwardCache& cache,
                                 const Eigen::VectorXd& labels, double l2, L2Scope scope,
                                 double eps = 1e-7);

}  // namespace cowclip
