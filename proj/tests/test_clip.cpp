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
#include <random>

#include "cowclip/clip.hpp"

namespace cowclip {
namespace {

SparseGradient one_column(std::int32_t id, std::int32_t cnt, std::vector<double> g) {
  SparseGradient out;
  out.dim = static_cast<int>(g.size());
  out.fields.resize(1);
  out.fields[0].ids = {id};
  out.fields[0].counts = {cnt};
  out.fields[0].grads = RowMatrix(1, static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) out.fields[0].grads(0, static_cast<Eigen::Index>(k)) = g[k];
  return out;
}

struct RandomCase {
  EmbeddingTable table;
  SparseGradient grad;
};

RandomCase random_case(std::mt19937_64& rng, double grad_scale) {
  std::normal_distribution<double> normal;
  const int dim = 1 + static_cast<int>(rng() % 6);
  const std::vector<std::int64_t> vocab{3 + static_cast<std::int64_t>(rng() % 20), 1 + static_cast<std::int64_t>(rng() % 5)};
  RandomCase c{init_table(vocab, dim, 0.1, rng()), {}};
  c.grad.dim = dim;
  c.grad.fields.resize(vocab.size());
  for (std::size_t f = 0; f < vocab.size(); ++f) {
    auto& fg = c.grad.fields[f];
    for (std::int32_t id = 0; id < vocab[f]; ++id) {
      if (rng() % 2) {
        fg.ids.push_back(id);
        fg.counts.push_back(1 + static_cast<std::int32_t>(rng() % 8));
      }
    }
    fg.grads = RowMatrix(static_cast<Eigen::Index>(fg.ids.size()), dim);
    for (Eigen::Index i = 0; i < fg.grads.size(); ++i) fg.grads.data()[i] = grad_scale * normal(rng);
  }
  return c;
}

TEST(Threshold, Examples) {
  std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(clip_by_threshold(zero, 1.0), 1.0);
  EXPECT_EQ(zero, (std::vector<double>{0.0, 0.0}));
  std::vector<double> small{0.3, 0.4};
  clip_by_threshold(small, 1.0);
  EXPECT_EQ(small, (std::vector<double>{0.3, 0.4}));
  std::vector<double> g{0.6, 0.8};
  clip_by_threshold(g, 0.2);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 0.2, 1e-16);
  EXPECT_NEAR(g[0] / g[1], 0.75, 1e-15);
  EXPECT_THROW(clip_by_threshold(g, -1.0), std::invalid_argument);
}

TEST(CowClip, CountScalesThreshold) {
  EmbeddingTable t({4}, 2);
  t.field(0).row(1) << 0.06, 0.08;  // |w| = 0.1
  const SparseGradient out = cowclip(t, one_column(1, 2, {0.6, 0.8}), 1.0, 1e-5);
  EXPECT_NEAR(out.fields[0].grads.row(0).norm(), 0.2, 1e-15);
}

TEST(CowClip, ZetaDominatesForTinyWeights) {
  EmbeddingTable t({2}, 2);
  t.field(0)(0, 0) = 1e-7;
  const SparseGradient out = cowclip(t, one_column(0, 1, {0.0, 1.0}), 1.0, 1e-4);
  EXPECT_NEAR(out.fields[0].grads.row(0).norm(), 1e-4, 1e-19);
}

TEST(CowClip, UnderThresholdIsBitIdentical) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomCase c = random_case(rng, 1e-6);
    EXPECT_EQ(cowclip(c.table, c.grad, 1.0, 1e-4), c.grad);
  }
}

TEST(CowClip, MatchesPerColumnOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCase c = random_case(rng, 0.5);
    const double r = 0.5 + (rng() % 100) / 50.0, zeta = 1e-3;
    const SparseGradient out = cowclip(c.table, c.grad, r, zeta);
    for (std::size_t f = 0; f < c.grad.fields.size(); ++f) {
      const auto& in = c.grad.fields[f];
      for (std::size_t k = 0; k < in.size(); ++k) {
        const Eigen::RowVectorXd g = in.grads.row(static_cast<Eigen::Index>(k));
        double wsq = 0;
        for (int d = 0; d < c.table.dim(); ++d) wsq += std::pow(c.table.field(f)(in.ids[k], d), 2);
        const double t = in.counts[k] * std::max(r * std::sqrt(wsq), zeta);
        const Eigen::RowVectorXd expect = g.norm() > t ? Eigen::RowVectorXd(g * (t / g.norm())) : g;
        EXPECT_LE((out.fields[f].grads.row(static_cast<Eigen::Index>(k)) - expect).cwiseAbs().maxCoeff(), 1e-15);
      }
    }
  }
}

TEST(CowClip, HugeRAndZetaAreIdentity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomCase c = random_case(rng, 100.0);
    EXPECT_EQ(cowclip(c.table, c.grad, 1e300, 1e300), c.grad);
  }
}

TEST(CowClip, ThresholdMonotoneInCountAndR) {
  EmbeddingTable t({1}, 3);
  t.field(0).row(0) << 0.1, 0.2, 0.3;
  double prev = 0;
  for (int cnt = 1; cnt < 6; ++cnt) {
    const double n = cowclip(t, one_column(0, cnt, {5, 5, 5}), 1.0, 1e-4).fields[0].grads.norm();
    EXPECT_GT(n, prev);
    prev = n;
  }
  prev = 0;
  for (const double r : {0.1, 0.5, 1.0, 2.0}) {
    const double n = cowclip(t, one_column(0, 1, {5, 5, 5}), r, 1e-4).fields[0].grads.norm();
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(Global, Examples) {
  SparseGradient g = one_column(0, 1, {30.0, 40.0});  // norm 50
  SparseGradient small = one_column(0, 1, {3.0, 4.0});
  const SparseGradient keep = small;
  clip_global(small, 25.0);
  EXPECT_EQ(small, keep);
  clip_global(g, 25.0);
  EXPECT_DOUBLE_EQ(g.fields[0].grads(0, 0), 15.0);
  EXPECT_DOUBLE_EQ(g.fields[0].grads(0, 1), 20.0);
  EXPECT_EQ(ClipConfig{}.clip_value, 25.0);
}

TEST(Fieldwise, OnlyOffendingFieldRescaled) {
  SparseGradient g;
  g.dim = 1;
  g.fields.resize(2);
  g.fields[0] = one_column(0, 1, {3.0}).fields[0];
  g.fields[1] = one_column(0, 1, {0.5}).fields[0];
  clip_fieldwise(g, 1.0);
  EXPECT_EQ(g.fields[0].grads(0, 0), 1.0);
  EXPECT_EQ(g.fields[1].grads(0, 0), 0.5);
  SparseGradient h = one_column(0, 1, {3.0});
  clip_fieldwise(h, 1.0, 4.0, ClipScaleMode::kSqrt);
  EXPECT_EQ(h.fields[0].grads(0, 0), 2.0);
}

TEST(Fieldwise, MergedRareIdBatchGrowsBySqrtS) {
  // Every id appears once, so the field block of s merged batches stacks s
  // independent blocks.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  const int b = 256, dim = 8;
  for (const int s : {4, 16}) {
    double ratio_sum = 0;
    for (int trial = 0; trial < 20; ++trial) {
      LookupRecord big{static_cast<std::size_t>(b * s), 1, {}};
      for (int i = 0; i < b * s; ++i) big.ids.push_back(i);
      Eigen::MatrixXd up(b * s, dim);
      for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = normal(rng);
      const LookupRecord small{static_cast<std::size_t>(b), 1, {big.ids.begin(), big.ids.begin() + b}};
      // Sum gradients, not means, as in the merge argument.
      const double nb = accumulate_gradients(small, up.topRows(b), dim).fields[0].grads.norm() * b;
      const double nsb = accumulate_gradients(big, up, dim).fields[0].grads.norm() * b * s;
      ratio_sum += nsb / nb;
    }
    EXPECT_NEAR(ratio_sum / 20, std::sqrt(s), 0.2 * std::sqrt(s));
  }
}

TEST(Columnwise, Examples) {
  SparseGradient z = one_column(0, 3, {0.0, 0.0});
  const SparseGradient zc = z;
  clip_columnwise(z, 1.0);
  EXPECT_EQ(z, zc);
  SparseGradient g = one_column(0, 3, {3.0, 4.0});
  clip_columnwise(g, 1.0);  // the count plays no part
  EXPECT_NEAR(g.fields[0].grads.norm(), 1.0, 1e-15);
}

TEST(AdaptiveFieldwise, Examples) {
  EmbeddingTable t({3}, 2);
  t.field(0)(0, 0) = 1.2;
  t.field(0)(2, 1) = 1.6;  // field norm 2
  SparseGradient one = one_column(1, 1, {0.6, 0.8});
  const SparseGradient keep = one;
  clip_adaptive_fieldwise(t, one, 1.0, 1e-4);
  EXPECT_EQ(one, keep);
  SparseGradient three = one_column(1, 1, {1.8, 2.4});
  clip_adaptive_fieldwise(t, three, 1.0, 1e-4);
  EXPECT_NEAR(three.fields[0].grads.norm(), 2.0, 1e-15);
  EmbeddingTable tiny({3}, 2);
  SparseGradient g = one_column(1, 1, {0.6, 0.8});
  clip_adaptive_fieldwise(tiny, g, 1.0, 1e-3);
  EXPECT_NEAR(g.fields[0].grads.norm(), 1e-3, 1e-18);
}

class EveryVariant : public ::testing::TestWithParam<ClipVariant> {};

TEST_P(EveryVariant, BoundedDirectionPreservingIdempotent) {
  std::mt19937_64 rng(7);
  ClipConfig cfg;
  cfg.variant = GetParam();
  cfg.clip_value = 0.3;
  cfg.r = 1.0;
  cfg.zeta = 1e-3;
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCase c = random_case(rng, 0.5);
    SparseGradient once = c.grad;
    apply_clip(cfg, c.table, once);
    // Each entry is a non-negative multiple of the input.
    for (std::size_t f = 0; f < once.fields.size(); ++f) {
      const auto& a = c.grad.fields[f].grads;
      const auto& b = once.fields[f].grads;
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (a.row(r).norm() == 0) continue;
        const double cos = a.row(r).dot(b.row(r)) / (a.row(r).norm() * b.row(r).norm());
        EXPECT_NEAR(cos, 1.0, 1e-12);
        EXPECT_LE(b.row(r).norm(), a.row(r).norm() * (1 + 1e-15));
      }
    }
    SparseGradient twice = once;
    apply_clip(cfg, c.table, twice);
    EXPECT_EQ(twice, once);
  }
}

INSTANTIATE_TEST_SUITE_P(Clip, EveryVariant,
                         ::testing::Values(ClipVariant::kNone, ClipVariant::kGlobal, ClipVariant::kFieldwise,
                                           ClipVariant::kColumnwise, ClipVariant::kAdaptiveFieldwise,
                                           ClipVariant::kCowClip),
                         [](const auto& info) { return to_string(info.param); });

TEST(ClipConfig, Validation) {
  ClipConfig c;
  c.variant = ClipVariant::kCowClip;
  c.zeta = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.variant = ClipVariant::kNone;
  EXPECT_NO_THROW(validate(c));
  EXPECT_THROW(parse_clip_variant("rowwise"), std::invalid_argument);
}

}  // namespace
}  // namespace cowclip
