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

#include "cowclip/clip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cowclip/scaling.hpp"

namespace cowclip {

ClipVariant parse_clip_variant(std::string_view name) {
  if (name == "none") return ClipVariant::kNone;
  if (name == "global") return ClipVariant::kGlobal;
  if (name == "fieldwise") return ClipVariant::kFieldwise;
  if (name == "columnwise") return ClipVariant::kColumnwise;
  if (name == "adaptive_fieldwise") return ClipVariant::kAdaptiveFieldwise;
  if (name == "cowclip") return ClipVariant::kCowClip;
  throw std::invalid_argument("unknown clip variant '" + std::string(name) + "'");
}

std::string to_string(ClipVariant variant) {
  switch (variant) {
    case ClipVariant::kNone: return "none";
    case ClipVariant::kGlobal: return "global";
    case ClipVariant::kFieldwise: return "fieldwise";
    case ClipVariant::kColumnwise: return "columnwise";
    case ClipVariant::kAdaptiveFieldwise: return "adaptive_fieldwise";
    case ClipVariant::kCowClip: return "cowclip";
  }
  return "unknown";
}

ClipScaleMode parse_clip_scale_mode(std::string_view name) {
  if (name == "linear") return ClipScaleMode::kLinear;
  if (name == "sqrt") return ClipScaleMode::kSqrt;
  throw std::invalid_argument("unknown clip scale mode '" + std::string(name) + "'");
}

std::string to_string(ClipScaleMode mode) { return mode == ClipScaleMode::kLinear ? "linear" : "sqrt"; }

void validate(const ClipConfig& config) {
  switch (config.variant) {
    case ClipVariant::kNone:
      return;
    case ClipVariant::kGlobal:
    case ClipVariant::kFieldwise:
    case ClipVariant::kColumnwise:
      if (!(config.clip_value > 0.0)) throw std::invalid_argument("clip.value must be > 0");
      return;
    case ClipVariant::kAdaptiveFieldwise:
    case ClipVariant::kCowClip:
      if (!(config.r > 0.0)) throw std::invalid_argument("clip.r must be > 0");
      if (!(config.zeta > 0.0)) throw std::invalid_argument("clip.zeta must be > 0");
      return;
  }
}

namespace {

// A rescaled vector can measure a few ulps above its threshold; treating that
// as "within" keeps clipping idempotent.
constexpr double kRoundingSlack = 16.0 * std::numeric_limits<double>::epsilon();

bool within(double norm, double threshold) { return norm <= threshold * (1.0 + kRoundingSlack); }

}  // namespace

double clip_by_threshold(std::span<double> g, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("clip threshold must be >= 0");
  double sq = 0.0;
  for (const double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (within(norm, threshold)) return 1.0;
  const double factor = threshold / norm;
  for (double& x : g) x *= factor;
  return factor;
}

namespace {

std::span<double> row_span(RowMatrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

void scale_all(SparseGradient& grad, double factor) {
  for (auto& fg : grad.fields) fg.grads *= factor;
}

}  // namespace

void cowclip_inplace(const EmbeddingTable& table, SparseGradient& grad, double r, double zeta) {
  if (grad.fields.size() != table.n_fields()) {
    throw std::invalid_argument("sparse gradient does not match table");
  }
  for (std::size_t f = 0; f < grad.fields.size(); ++f) {
    auto& fg = grad.fields[f];
    for (std::size_t c = 0; c < fg.size(); ++c) {
      const double w_norm = table.column(f, fg.ids[c]).norm();
      const double clip_t = static_cast<double>(fg.counts[c]) * std::max(r * w_norm, zeta);
      clip_by_threshold(row_span(fg.grads, static_cast<Eigen::Index>(c)), clip_t);
    }
  }
}

SparseGradient cowclip(const EmbeddingTable& table, const SparseGradient& grad, double r, double zeta) {
  SparseGradient out = grad;
  cowclip_inplace(table, out, r, zeta);
  return out;
}

void clip_global(SparseGradient& grad, double clip_value) {
  double sq = 0.0;
  for (const auto& fg : grad.fields) sq += fg.grads.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!within(norm, clip_value)) scale_all(grad, clip_value / norm);
}

void clip_fieldwise(SparseGradient& grad, double clip_value, double batch_factor, ClipScaleMode mode) {
  const double threshold = clip_value_scale(clip_value, batch_factor, mode);
  for (auto& fg : grad.fields) {
    const double norm = fg.grads.norm();
    if (!within(norm, threshold)) fg.grads *= threshold / norm;
  }
}

void clip_columnwise(SparseGradient& grad, double clip_value) {
  for (auto& fg : grad.fields) {
    for (std::size_t c = 0; c < fg.size(); ++c) {
      clip_by_threshold(row_span(fg.grads, static_cast<Eigen::Index>(c)), clip_value);
    }
  }
}

void clip_adaptive_fieldwise(const EmbeddingTable& table, SparseGradient& grad, double r, double zeta) {
  if (grad.fields.size() != table.n_fields()) {
    throw std::invalid_argument("sparse gradient does not match table");
  }
  for (std::size_t f = 0; f < grad.fields.size(); ++f) {
    const double threshold = std::max(r * table.field(f).norm(), zeta);
    auto& fg = grad.fields[f];
    const double norm = fg.grads.norm();
    if (!within(norm, threshold)) fg.grads *= threshold / norm;
  }
}

void apply_clip(const ClipConfig& config, const EmbeddingTable& table, SparseGradient& grad) {
  switch (config.variant) {
    case ClipVariant::kNone: return;
    case ClipVariant::kGlobal: clip_global(grad, config.clip_value); return;
    case ClipVariant::kFieldwise: clip_fieldwise(grad, config.clip_value); return;
    case ClipVariant::kColumnwise: clip_columnwise(grad, config.clip_value); return;
    case ClipVariant::kAdaptiveFieldwise: clip_adaptive_fieldwise(table, grad, config.r, config.zeta); return;
    case ClipVariant::kCowClip: cowclip_inplace(table, grad, config.r, config.zeta); return;
  }
}

}  // namespace cowclip
