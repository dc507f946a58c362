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

#include "cowclip/scaling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cowclip {

ScalingRule parse_scaling_rule(std::string_view name) {
  if (name == "none") return ScalingRule::kNone;
  if (name == "sqrt") return ScalingRule::kSqrt;
  if (name == "sqrt_star") return ScalingRule::kSqrtStar;
  if (name == "linear") return ScalingRule::kLinear;
  if (name == "n2_lambda") return ScalingRule::kN2Lambda;
  if (name == "cowclip") return ScalingRule::kCowClip;
  throw std::invalid_argument("unknown scaling rule '" + std::string(name) + "'");
}

std::string to_string(ScalingRule rule) {
  switch (rule) {
    case ScalingRule::kNone: return "none";
    case ScalingRule::kSqrt: return "sqrt";
    case ScalingRule::kSqrtStar: return "sqrt_star";
    case ScalingRule::kLinear: return "linear";
    case ScalingRule::kN2Lambda: return "n2_lambda";
    case ScalingRule::kCowClip: return "cowclip";
  }
  return "unknown";
}

void validate(const BaseHyperparams& base) {
  if (base.base_batch < 1) throw std::invalid_argument("base_batch must be >= 1");
  if (!(base.eta_dense > 0.0) || !(base.eta_embed > 0.0)) {
    throw std::invalid_argument("learning rates must be > 0");
  }
  if (!(base.l2 > 0.0)) throw std::invalid_argument("L2 weight must be > 0");
}

BaseHyperparams ScalingPlan::as_base() const {
  BaseHyperparams b;
  b.base_batch = target_batch;
  b.eta_dense = eta_dense;
  b.eta_embed = eta_embed;
  b.l2 = l2;
  b.clip_value = clip_value;
  b.clip_scale = clip_scale;
  b.r = r;
  b.zeta = zeta;
  return b;
}

double clip_value_scale(double base_clip, double s, ClipScaleMode mode) {
  if (!(s > 0.0)) throw std::invalid_argument("batch factor must be > 0");
  return mode == ClipScaleMode::kLinear ? base_clip * s : base_clip * std::sqrt(s);
}

ScalingPlan scale(ScalingRule rule, const BaseHyperparams& base, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("batch factor must be > 0");
  ScalingPlan plan;
  plan.rule = rule;
  plan.factor = s;
  plan.target_batch = static_cast<std::int64_t>(std::llround(static_cast<double>(base.base_batch) * s));
  plan.eta_dense = base.eta_dense;
  plan.eta_embed = base.eta_embed;
  plan.l2 = base.l2;
  plan.clip_value = base.clip_value;
  plan.clip_scale = base.clip_scale;
  plan.r = base.r;
  plan.zeta = base.zeta;

  const double root = std::sqrt(s);
  switch (rule) {
    case ScalingRule::kNone:
      return plan;
    case ScalingRule::kSqrt:
      plan.eta_dense *= root;
      plan.eta_embed *= root;
      plan.l2 *= root;
      break;
    case ScalingRule::kSqrtStar:
      plan.eta_dense *= root;
      plan.eta_embed *= root;
      break;
    case ScalingRule::kLinear:
      plan.eta_dense *= s;
      plan.eta_embed *= s;
      break;
    case ScalingRule::kN2Lambda:
      plan.eta_dense *= s;
      plan.l2 *= s * s;
      break;
    case ScalingRule::kCowClip:
      plan.eta_dense *= root;
      plan.l2 *= s;
      break;
    default:
      throw std::invalid_argument("unknown scaling rule");
  }
  plan.clip_value = clip_value_scale(base.clip_value, s, base.clip_scale);
  return plan;
}

ScalingPlan scale_to_batch(ScalingRule rule, const BaseHyperparams& base, std::int64_t target_batch) {
  if (target_batch < 1) throw std::invalid_argument("target batch must be >= 1");
  if (base.base_batch < 1) throw std::invalid_argument("base batch must be >= 1");
  ScalingPlan plan =
      scale(rule, base, static_cast<double>(target_batch) / static_cast<double>(base.base_batch));
  plan.target_batch = target_batch;
  return plan;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

std::vector<PresetSchedule> build_presets() {
  const double r2 = std::sqrt(2.0);
  std::vector<PresetSchedule> out;

  BaseHyperparams base_1k;  // 1e-4 everywhere at 1024

  {
    PresetSchedule p{"sqrt_1k", ScalingRule::kSqrt, base_1k, {}};
    p.rows = {{1024, 1e-4, 1e-4, 1e-4},
              {2048, r2 * 1e-4, r2 * 1e-4, r2 * 1e-4},
              {4096, 2e-4, 2e-4, 2e-4},
              {8192, 2 * r2 * 1e-4, 2 * r2 * 1e-4, 2 * r2 * 1e-4}};
    out.push_back(std::move(p));
  }
  {
    PresetSchedule p{"linear_1k", ScalingRule::kLinear, base_1k, {}};
    p.rows = {{1024, 1e-4, 1e-4, 1e-4},
              {2048, 2e-4, 2e-4, 1e-4},
              {4096, 4e-4, 4e-4, 1e-4},
              {8192, 8e-4, 8e-4, 1e-4}};
    out.push_back(std::move(p));
  }
  {
    PresetSchedule p{"empirical_1k", ScalingRule::kN2Lambda, base_1k, {}};
    p.rows = {{1024, 1e-4, 1e-4, 1e-4},
              {2048, 2e-4, 1e-4, 4e-4},
              {4096, 4e-4, 1e-4, 1.6e-3},
              {8192, 8e-4, 1e-4, 1.28e-2}};
    p.rows[3].l2_tuned = true;
    out.push_back(std::move(p));
  }
  {
    BaseHyperparams base = base_1k;
    base.eta_dense = 8e-4;
    base.zeta = 1e-5;
    PresetSchedule p{"cowclip_criteo", ScalingRule::kCowClip, base, {}};
    const double zeta = 1e-5;
    p.rows = {{1024, 8e-4, 1e-4, 1e-4, 1, zeta},
              {2048, 8 * r2 * 1e-4, 1e-4, 2e-4, 1, zeta},
              {4096, 16e-4, 1e-4, 4e-4, 1, zeta},
              {8192, 16 * r2 * 1e-4, 1e-4, 8e-4, 1, zeta},
              {16384, 32e-4, 1e-4, 1.6e-3, 1, zeta},
              {32768, 32 * r2 * 1e-4, 1e-4, 3.2e-3, 1, zeta},
              {65536, 64e-4, 1e-4, 6.4e-3, 1, zeta},
              {131072, 64 * r2 * 1e-4, 1e-4, 1.28e-2, 1, zeta}};
    // Printed as 8*sqrt(2)e-2 and 4e-3.
    p.rows[1].eta_dense_corrected = true;
    p.rows[2].l2_corrected = true;
    out.push_back(std::move(p));
  }
  {
    BaseHyperparams base = base_1k;
    base.r = 10;
    base.zeta = 1e-3;
    PresetSchedule p{"cowclip_avazu", ScalingRule::kCowClip, base, {}};
    p.rows = {{1024, 1e-4, 1e-4, 1e-4, 10, 1e-3},
              {2048, r2 * 1e-4, 1e-4, 2e-4, 10, 1e-3},
              {4096, 2e-4, 1e-4, 4e-4, 1, 1e-4},
              {8192, 2 * r2 * 1e-4, 1e-4, 8e-4, 1, 1e-4},
              {16384, 4e-4, 1e-4, 1.6e-3, 1, 1e-4},
              {32768, 4 * r2 * 1e-4, 1e-4, 3.2e-3, 1, 1e-4},
              {65536, 8e-4, 1e-4, 6.4e-3, 1, 1e-4},
              {131072, 16e-4, 1e-4, 9.6e-3, 1, 1e-4}};
    // Printed as 4e-3.
    p.rows[2].l2_corrected = true;
    p.rows[7].l2_tuned = true;
    p.rows[7].eta_dense_tuned = true;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

const std::vector<PresetSchedule>& preset_schedules() {
  static const std::vector<PresetSchedule> presets = build_presets();
  return presets;
}

const PresetSchedule& preset_schedule(std::string_view name) {
  for (const auto& p : preset_schedules()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown preset schedule '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

Eigen::MatrixXd problem_gradients(const QuadraticProblem& problem) {
  if (problem.dim < 1 || problem.n_points < 2) throw std::invalid_argument("degenerate quadratic problem");
  std::mt19937_64 rng(problem.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Anisotropic point cloud with a nonzero mean.
  Eigen::MatrixXd g(problem.n_points, problem.dim);
  for (int i = 0; i < problem.n_points; ++i) {
    for (int d = 0; d < problem.dim; ++d) {
      const double x = 0.5 + (1.0 + d) * normal(rng);
      g(i, d) = -x;
    }
  }
  return g;
}

}  // namespace

Eigen::MatrixXd estimate_update_covariance(const QuadraticProblem& problem, std::int64_t batch,
                                           double eta, std::int64_t n_trials, std::uint64_t seed) {
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (n_trials < 2) throw std::invalid_argument("need at least two trials");
  const Eigen::MatrixXd g = problem_gradients(problem);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, problem.n_points - 1);
  Eigen::MatrixXd updates(n_trials, problem.dim);
  Eigen::RowVectorXd mean_g(problem.dim);
  for (std::int64_t t = 0; t < n_trials; ++t) {
    mean_g.setZero();
    for (std::int64_t k = 0; k < batch; ++k) mean_g += g.row(pick(rng));
    updates.row(t) = -eta * mean_g / static_cast<double>(batch);
  }
  const Eigen::RowVectorXd mu = updates.colwise().mean();
  const Eigen::MatrixXd centered = updates.rowwise() - mu;
  return centered.transpose() * centered / static_cast<double>(n_trials - 1);
}

Eigen::MatrixXd predicted_update_covariance(const QuadraticProblem& problem, std::int64_t batch, double eta) {
  const Eigen::MatrixXd g = problem_gradients(problem);
  const Eigen::RowVectorXd mu = g.colwise().mean();
  const Eigen::MatrixXd centered = g.rowwise() - mu;
  const Eigen::MatrixXd pop_cov = centered.transpose() * centered / static_cast<double>(g.rows());
  return eta * eta / static_cast<double>(batch) * pop_cov;
}

UpdateExpectation expected_update_frequency_check(double p, std::int64_t batch, std::int64_t s,
                                                  double eta_small, double eta_big,
                                                  std::int64_t n_trials, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in [0, 1]");
  if (batch < 1 || s < 1 || n_trials < 1) throw std::invalid_argument("batch, s and n_trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::binomial_distribution<std::int64_t> occurrences(batch, p);
  double big = 0.0;
  double small = 0.0;
  for (std::int64_t t = 0; t < n_trials; ++t) {
    bool in_big = false;
    for (std::int64_t i = 0; i < s; ++i) {
      const bool present = occurrences(rng) > 0;
      if (present) small += eta_small;
      in_big = in_big || present;
    }
    if (in_big) big += eta_big;
  }
  const double n = static_cast<double>(n_trials);
  return {big / n, small / n};
}

}  // namespace cowclip
