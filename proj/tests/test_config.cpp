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
#include <sstream>

#include "cowclip/config.hpp"
#include "cowclip/errors.hpp"
#include "cowclip/harness.hpp"

namespace cowclip {
namespace {

Config parse_text(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const Config c = parse_text("# header\n\n  opt.lr_dense = 8e-4 \nmodel.kind=dcn\nopt.lr_dense = 1e-3\n");
  EXPECT_EQ(c.get_double("opt.lr_dense", 0), 1e-3);
  EXPECT_EQ(c.get_string("model.kind", ""), "dcn");
  EXPECT_EQ(c.get_string("missing", "x"), "x");
}

TEST(Config, MalformedLinesReportRow) {
  try {
    parse_text("a = 1\n\nno equals sign\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  EXPECT_THROW(parse_text(" = 4\n"), ParseError);
}

TEST(Config, TypedGetters) {
  const Config c = parse_text("i = 42\nd = 2.5e-3\nb1 = on\nb0 = no\nl = 1, 2 ,3\nbad = 1.5x\n");
  EXPECT_EQ(c.get_int("i", 0), 42);
  EXPECT_EQ(c.get_double("d", 0), 2.5e-3);
  EXPECT_TRUE(c.get_bool("b1", false));
  EXPECT_FALSE(c.get_bool("b0", true));
  EXPECT_EQ(c.get_int_list("l", {}), (std::vector<std::int64_t>{1, 2, 3}));
  EXPECT_THROW(c.get_double("bad", 0), std::invalid_argument);
  EXPECT_THROW(c.get_int("d", 0), std::invalid_argument);
  EXPECT_THROW(c.get_bool("i", false), std::invalid_argument);
}

TEST(Config, TextRoundTrip) {
  Config c;
  c.set("a.b", "3");
  c.set("z", "hello world");
  EXPECT_EQ(parse_text(c.to_text()), c);
  Config other;
  other.set("a.b", "4");
  c.merge(other);
  EXPECT_EQ(c.get_int("a.b", 0), 4);
}

TEST(Config, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, unit(rng)) * (i % 2 ? 1 : -1);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.0128), "0.0128");
}

TEST(Config, LoadMissingFileIsIoError) {
  EXPECT_THROW(Config::load("/nonexistent/dir/x.cfg"), IoError);
}

TEST(ExperimentConfig, DefaultsAndOverrides) {
  const ExperimentConfig d = experiment_from_config(Config{});
  EXPECT_EQ(d.model.kind, ModelKind::kDeepFM);
  EXPECT_EQ(d.model.hidden, (std::vector<int>{400, 400, 400}));
  EXPECT_EQ(d.model.embed_dim, 10);
  EXPECT_EQ(d.base.base_batch, 1024);
  EXPECT_EQ(d.batch_size, 1024);
  EXPECT_EQ(d.base.r, 1.0);
  EXPECT_EQ(d.base.zeta, 1e-4);
  EXPECT_EQ(d.opt.adam.beta1, 0.9);
  EXPECT_EQ(d.opt.adam.beta2, 0.999);
  EXPECT_EQ(d.opt.adam.eps, 1e-8);
  EXPECT_TRUE(d.opt.dense_l2);
  EXPECT_EQ(d.opt.l2_scope, L2Scope::kEmbeddings);
  EXPECT_EQ(d.resolved_clip_variant(), ClipVariant::kNone);
  EXPECT_EQ(d.resolved_init_sigma(), 1e-4);

  const ExperimentConfig c = experiment_from_config(
      parse_text("scale.rule = cowclip\nmodel.kind = dcnv2\nmodel.hidden = 64,32\ntrain.batch_size = 8192\n"));
  EXPECT_EQ(c.rule, ScalingRule::kCowClip);
  EXPECT_EQ(c.model.kind, ModelKind::kDCNv2);
  EXPECT_EQ(c.model.hidden, (std::vector<int>{64, 32}));
  EXPECT_EQ(c.batch_size, 8192);
  EXPECT_EQ(c.resolved_clip_variant(), ClipVariant::kCowClip);
  EXPECT_EQ(c.resolved_init_sigma(), 1e-2);
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(experiment_from_config(parse_text("opt.lr = 1\n")), std::invalid_argument);
  EXPECT_THROW(experiment_from_config(parse_text("model.kind = gbdt\n")), std::invalid_argument);
  EXPECT_THROW(experiment_from_config(parse_text("opt.lr_dense = -1\n")), std::invalid_argument);
  EXPECT_THROW(experiment_from_config(parse_text("clip.variant = cowclip\nclip.zeta = 0\n")), std::invalid_argument);
}

TEST(ExperimentConfig, ToConfigRoundTrips) {
  const ExperimentConfig c = experiment_from_config(
      parse_text("scale.rule = sqrt\nopt.l2 = 3e-5\nsweep.batch_sizes = 1024,4096\nclip.variant = global\n"));
  const Config text = to_config(c);
  EXPECT_EQ(to_config(experiment_from_config(text)), text);
}

}  // namespace
}  // namespace cowclip
