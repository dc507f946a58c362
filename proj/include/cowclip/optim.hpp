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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cowclip/embedding.hpp"
#include "cowclip/models.hpp"

namespace cowclip {

// L2 enters the gradient (g + lambda * w) before the moments, not as
// decoupled weight decay.

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool bias_correction = true;
};

// Elementwise kernels. `step` is the 1-based step index used for bias
// correction.
void sgd_update(std::span<double> w, std::span<const double> g, double lr, double l2);
void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, double lr, double l2, const AdamConfig& config,
                 std::int64_t step);

// ---------------------------------------------------------------------------
// Dense tensors

// w <- w - lr * (g + l2 * w).
void sgd_step(DenseParams& params, const DenseParams& grads, double lr, double l2);

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  std::int64_t t = 0;

  static AdamState zeros_like(const DenseParams& params);
};

void adam_step(AdamState& state, DenseParams& params, const DenseParams& grads, double lr, double l2,
               const AdamConfig& config = {});

// ---------------------------------------------------------------------------
// Embedding tables

struct TableAdamState {
  std::vector<RowMatrix> m;
  std::vector<RowMatrix> v;
  std::int64_t t = 0;

  static TableAdamState zeros_like(const EmbeddingTable& table);
};

// Columns present in `grad` get a full Adam update on grad + l2 * w. With
// `dense_l2` every absent column also takes an Adam step on l2 * w alone;
// without it absent columns and their moments are left untouched.
void adam_sparse_step(TableAdamState& state, EmbeddingTable& table, const SparseGradient& grad,
                      double lr, double l2, bool dense_l2, const AdamConfig& config = {});

// Plain SGD counterpart used by the sgd optimizer kind.
void sgd_sparse_step(EmbeddingTable& table, const SparseGradient& grad, double lr, double l2,
                     bool dense_l2);

// ---------------------------------------------------------------------------
// Warmup

// dense_only ramps the dense-network rate; all ramps the embedding rate too.
enum class WarmupScope { kDenseOnly, kAll };

WarmupScope parse_warmup_scope(std::string_view name);
std::string to_string(WarmupScope scope);

struct WarmupSchedule {
  double target_lr = 0.0;
  std::int64_t warmup_steps = 0;
  WarmupScope scope = WarmupScope::kDenseOnly;

  // target * min(1, step / warmup_steps) for a 1-based step.
  double lr(std::int64_t step) const;
};

// ---------------------------------------------------------------------------
// Loss-scaling equivalence

struct EquivalenceOptions {
  std::int64_t steps = 200;
  double lr = 1e-3;
  double w0 = 0.5;
  // Gradient magnitudes are drawn from [min_abs_grad, max_abs_grad] with a
  // random sign.
  double min_abs_grad = 0.5;
  double max_abs_grad = 1.5;
  AdamConfig adam{0.9, 0.999, 1e-12, true};
};

// Two scalar Adam runs on the same gradient stream: A sees c * g with weight
// lambda, B sees g with weight lambda / c, same learning rate. Returns
// max_t |w_A - w_B|. Throws std::invalid_argument for c <= 0.
double verify_adam_scaling_equivalence(double c, double l2, std::uint64_t seed,
                                       const EquivalenceOptions& options = {});

// SGD: A sees c * g with (lr, lambda), B sees g with (c * lr, lambda / c).
double verify_sgd_scaling_equivalence(double c, double l2, std::uint64_t seed,
                                      const EquivalenceOptions& options = {});

// Adam with lambda = 0 fed g and c * g. Returns max_t |w_1 - w_c|.
double adam_gradient_scale_invariance(double c, std::uint64_t seed,
                                      const EquivalenceOptions& options = {});

}  // namespace cowclip
