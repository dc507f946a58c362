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

#include "cowclip/clip.hpp"

namespace cowclip {

// Hyperparameter scaling rules for growing the batch from b to s * b.
//
//   rule        dense lr    embed lr    L2
//   none        1           1           1
//   sqrt        sqrt(s)     sqrt(s)     sqrt(s)
//   sqrt_star   sqrt(s)     sqrt(s)     1
//   linear      s           s           1
//   n2_lambda   s           1           s^2
//   cowclip     sqrt(s)     1           s
//
// Constant clip thresholds follow clip_value_scale (sqrt by default) under
// every rule but `none`; r and zeta are never rescaled.
enum class ScalingRule { kNone, kSqrt, kSqrtStar, kLinear, kN2Lambda, kCowClip };

ScalingRule parse_scaling_rule(std::string_view name);
std::string to_string(ScalingRule rule);

struct BaseHyperparams {
  std::int64_t base_batch = 1024;
  double eta_dense = 1e-4;
  double eta_embed = 1e-4;
  double l2 = 1e-4;
  double clip_value = 25.0;
  ClipScaleMode clip_scale = ClipScaleMode::kSqrt;
  double r = 1.0;
  double zeta = 1e-4;

  bool operator==(const BaseHyperparams&) const = default;
};

// Throws std::invalid_argument unless every rate, weight and batch is positive.
void validate(const BaseHyperparams& base);

struct ScalingPlan {
  ScalingRule rule = ScalingRule::kNone;
  double factor = 1.0;
  std::int64_t target_batch = 0;
  double eta_dense = 0.0;
  double eta_embed = 0.0;
  double l2 = 0.0;
  double clip_value = 0.0;
  ClipScaleMode clip_scale = ClipScaleMode::kSqrt;
  double r = 0.0;
  double zeta = 0.0;

  // The plan's values as the base for a further rescaling.
  BaseHyperparams as_base() const;
};

// Throws std::invalid_argument for s <= 0.
ScalingPlan scale(ScalingRule rule, const BaseHyperparams& base, double s);
// s = target_batch / base.base_batch.
ScalingPlan scale_to_batch(ScalingRule rule, const BaseHyperparams& base, std::int64_t target_batch);

// base_clip * s (linear) or base_clip * sqrt(s) (sqrt).
double clip_value_scale(double base_clip, double s, ClipScaleMode mode);

// ---------------------------------------------------------------------------
// Published hyperparameter schedules

struct PresetRow {
  std::int64_t batch = 0;
  double eta_dense = 0.0;
  double eta_embed = 0.0;
  double l2 = 0.0;
  double r = 1.0;
  double zeta = 1e-4;
  // Hand-tuned cells that no rule produces.
  bool l2_tuned = false;
  bool eta_dense_tuned = false;
  // Cells whose printed value breaks the column's own progression; the row
  // stores the progression's value.
  bool l2_corrected = false;
  bool eta_dense_corrected = false;
};

struct PresetSchedule {
  std::string name;
  ScalingRule rule;
  BaseHyperparams base;
  std::vector<PresetRow> rows;
};

// sqrt_1k, linear_1k, empirical_1k (n2_lambda), cowclip_criteo, cowclip_avazu.
const std::vector<PresetSchedule>& preset_schedules();
const PresetSchedule& preset_schedule(std::string_view name);

// ---------------------------------------------------------------------------
// Monte Carlo checks of the rules' motivations

// Per-sample loss 0.5 |w - x_i|^2 over `n_points` fixed points, evaluated at
// w = 0, so each sample's gradient is -x_i.
struct QuadraticProblem {
  int dim = 5;
  int n_points = 2000;
  std::uint64_t seed = 1;
};

// Sample covariance of one SGD step dw = -eta * mean_{x in B} grad over
// `n_trials` independent with-replacement batches of size b.
Eigen::MatrixXd estimate_update_covariance(const QuadraticProblem& problem, std::int64_t batch,
                                           double eta, std::int64_t n_trials, std::uint64_t seed);

// Closed form for the same quantity: eta^2 / b times the population
// covariance of the per-sample gradients.
Eigen::MatrixXd predicted_update_covariance(const QuadraticProblem& problem, std::int64_t batch, double eta);

struct UpdateExpectation {
  double big_batch = 0.0;    // E[dw] for one step on the merged batch of s * b
  double small_batches = 0.0;  // E[dw] summed over the s constituent steps
  double ratio() const { return big_batch / small_batches; }
};

// An id present in each sample with probability p moves its embedding by
// lr * g whenever it appears in a batch (a fixed-gradient surrogate, g = 1).
// Each trial draws s small batches of b samples; the big batch is their union.
UpdateExpectation expected_update_frequency_check(double p, std::int64_t batch, std::int64_t s,
                                                  double eta_small, double eta_big,
                                                  std::int64_t n_trials, std::uint64_t seed);

}  // namespace cowclip
