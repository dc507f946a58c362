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


#include <gtest/gtest.h>

#include <cmath>

#include "cowclip/scaling.hpp"

namespace cowclip {
namespace {

constexpr ScalingRule kRules[] = {ScalingRule::kNone,   ScalingRule::kSqrt,     ScalingRule::kSqrtStar,
                                  ScalingRule::kLinear, ScalingRule::kN2Lambda, ScalingRule::kCowClip};

void expect_rel(double actual, double expected, double tol = 1e-15) {
  EXPECT_NEAR(actual, expected, tol * std::abs(expected)) << "expected " << expected;
}

TEST(Scale, RuleExamples) {
  const BaseHyperparams base;
  const ScalingPlan sq = scale(ScalingRule::kSqrt, base, 8);
  expect_rel(sq.eta_dense, 2 * std::sqrt(2.0) * 1e-4);
  expect_rel(sq.eta_embed, 2.828427e-4, 1e-6);
  expect_rel(sq.l2, 2 * std::sqrt(2.0) * 1e-4);

  const ScalingPlan lin = scale(ScalingRule::kLinear, base, 8);
  expect_rel(lin.eta_dense, 8e-4);
  expect_rel(lin.eta_embed, 8e-4);
  EXPECT_EQ(lin.l2, 1e-4);

  const ScalingPlan emp = scale(ScalingRule::kN2Lambda, base, 4);
  expect_rel(emp.l2, 1.6e-3);
  EXPECT_EQ(emp.eta_embed, 1e-4);
  expect_rel(emp.eta_dense, 4e-4);

  BaseHyperparams criteo = base;
  criteo.eta_dense = 8e-4;
  const ScalingPlan cc = scale(ScalingRule::kCowClip, criteo, 8);
  EXPECT_EQ(cc.eta_embed, 1e-4);
  expect_rel(cc.l2, 8e-4);
  expect_rel(cc.eta_dense, 16 * std::sqrt(2.0) * 1e-4);

  const ScalingPlan star = scale(ScalingRule::kSqrtStar, base, 4);
  expect_rel(star.eta_dense, 2e-4);
  expect_rel(star.eta_embed, 2e-4);
  EXPECT_EQ(star.l2, 1e-4);
}

TEST(Scale, UnitFactorIsIdentity) {
  BaseHyperparams base;
  base.eta_dense = 3e-3;
  base.l2 = 7e-5;
  base.clip_value = 11;
  for (const auto rule : kRules) {
    const ScalingPlan p = scale(rule, base, 1.0);
    EXPECT_EQ(p.as_base(), base) << to_string(rule);
    EXPECT_EQ(p.target_batch, base.base_batch);
  }
}

TEST(Scale, ComposesMultiplicatively) {
  const BaseHyperparams base;
  for (const auto rule : {ScalingRule::kSqrt, ScalingRule::kLinear, ScalingRule::kCowClip, ScalingRule::kN2Lambda}) {
    const ScalingPlan direct = scale(rule, base, 32);
    const ScalingPlan chained = scale(rule, scale(rule, base, 4).as_base(), 8);
    expect_rel(chained.eta_dense, direct.eta_dense, 4e-16);
    expect_rel(chained.eta_embed, direct.eta_embed, 4e-16);
    expect_rel(chained.l2, direct.l2, 4e-16);
    expect_rel(chained.clip_value, direct.clip_value, 4e-16);
    EXPECT_EQ(chained.target_batch, direct.target_batch);
  }
}

TEST(Scale, SgdL2StrengthIdentity) {
  const BaseHyperparams base;
  for (const double s : {2.0, 8.0, 128.0}) {
    const ScalingPlan sq = scale(ScalingRule::kSqrt, base, s);
    expect_rel(sq.eta_embed * sq.l2, s * base.eta_embed * base.l2, 4e-16);
    const ScalingPlan lin = scale(ScalingRule::kLinear, base, s);
    expect_rel(lin.eta_embed * lin.l2, s * base.eta_embed * base.l2);
    const ScalingPlan cc = scale(ScalingRule::kCowClip, base, s);
    expect_rel(cc.eta_embed * cc.l2, s * base.eta_embed * base.l2);
  }
}

TEST(Scale, ToBatchAndErrors) {
  const BaseHyperparams base;
  const ScalingPlan p = scale_to_batch(ScalingRule::kCowClip, base, 131072);
  EXPECT_EQ(p.factor, 128.0);
  expect_rel(p.l2, 1.28e-2);
  expect_rel(p.clip_value, 25 * std::sqrt(128.0));
  EXPECT_THROW(scale(ScalingRule::kSqrt, base, 0.0), std::invalid_argument);
  EXPECT_THROW(scale_to_batch(ScalingRule::kSqrt, base, 0), std::invalid_argument);
  EXPECT_THROW(parse_scaling_rule("cubic"), std::invalid_argument);
  for (const auto rule : kRules) EXPECT_EQ(parse_scaling_rule(to_string(rule)), rule);
}

TEST(Scale, RAndZetaNeverRescaled) {
  BaseHyperparams base;
  base.r = 3;
  base.zeta = 2e-5;
  for (const auto rule : kRules) {
    const ScalingPlan p = scale(rule, base, 64);
    EXPECT_EQ(p.r, 3);
    EXPECT_EQ(p.zeta, 2e-5);
  }
  EXPECT_EQ(scale(ScalingRule::kNone, base, 64).clip_value, base.clip_value);
}

TEST(ClipValueScale, Examples) {
  EXPECT_EQ(clip_value_scale(25, 1, ClipScaleMode::kSqrt), 25);
  EXPECT_EQ(clip_value_scale(25, 1, ClipScaleMode::kLinear), 25);
  EXPECT_EQ(clip_value_scale(25, 4, ClipScaleMode::kSqrt), 50);
  EXPECT_EQ(clip_value_scale(25, 8, ClipScaleMode::kLinear), 200);
}

TEST(Presets, RowsFollowTheirRuleUnlessTuned) {
  for (const auto& preset : preset_schedules()) {
    for (const auto& row : preset.rows) {
      const ScalingPlan p = scale_to_batch(preset.rule, preset.base, row.batch);
      if (!row.eta_dense_tuned) expect_rel(row.eta_dense, p.eta_dense, 1e-15);
      expect_rel(row.eta_embed, p.eta_embed, 1e-15);
      if (!row.l2_tuned) expect_rel(row.l2, p.l2, 1e-15);
    }
  }
  EXPECT_THROW(preset_schedule("adagrad"), std::invalid_argument);
  EXPECT_EQ(preset_schedule("cowclip_avazu").rows.back().l2, 9.6e-3);
}

TEST(Covariance, ZeroRateAndQuadraticInRate) {
  const QuadraticProblem q;
  EXPECT_TRUE(estimate_update_covariance(q, 16, 0.0, 100, 1).isZero(0));
  const double t1 = estimate_update_covariance(q, 16, 0.1, 20000, 2).trace();
  const double t2 = estimate_update_covariance(q, 16, 0.2, 20000, 3).trace();
  EXPECT_NEAR(t2 / t1, 4.0, 0.4);
}

TEST(Covariance, SqrtRulePreservesTrace) {
  const QuadraticProblem q;
  const double a = estimate_update_covariance(q, 64, 0.1, 20000, 4).trace();
  const double b = estimate_update_covariance(q, 256, 0.2, 20000, 5).trace();
  EXPECT_GE(b / a, 0.9);
  EXPECT_LE(b / a, 1.1);
  const double pred = predicted_update_covariance(q, 64, 0.1).trace();
  EXPECT_NEAR(a / pred, 1.0, 0.1);
}

TEST(UpdateFrequency, RareAndFrequentIds) {
  const auto fixed = expected_update_frequency_check(1e-4, 64, 16, 1.0, 1.0, 200000, 6);
  EXPECT_GE(fixed.ratio(), 0.9);
  EXPECT_LE(fixed.ratio(), 1.1);
  const auto naive = expected_update_frequency_check(1e-4, 64, 16, 1.0, 16.0, 200000, 7);
  EXPECT_NEAR(naive.ratio(), 16.0, 0.15 * 16);
  const auto frequent = expected_update_frequency_check(1.0, 64, 16, 1.0, 16.0, 10, 8);
  EXPECT_EQ(frequent.ratio(), 1.0);
}

}  // namespace
}  // namespace cowclip
