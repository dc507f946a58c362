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

#include <span>
#include <string>
#include <string_view>

#include "cowclip/embedding.hpp"

namespace cowclip {

// Gradient clipping on the embedding-table gradient. Dense-network and
// LR-weight gradients are never clipped.
enum class ClipVariant { kNone, kGlobal, kFieldwise, kColumnwise, kAdaptiveFieldwise, kCowClip };

ClipVariant parse_clip_variant(std::string_view name);
std::string to_string(ClipVariant variant);

enum class ClipScaleMode { kLinear, kSqrt };

ClipScaleMode parse_clip_scale_mode(std::string_view name);
std::string to_string(ClipScaleMode mode);

struct ClipConfig {
  ClipVariant variant = ClipVariant::kNone;
  // Constant threshold for global, fieldwise and columnwise.
  double clip_value = 25.0;
  // Adaptive variants: threshold = max(r * |w|, zeta), times cnt for CowClip.
  double r = 1.0;
  double zeta = 1e-4;
};

// Throws std::invalid_argument when a field the variant needs is not positive.
void validate(const ClipConfig& config);

// g <- min(1, threshold / |g|) g, leaving g untouched when |g| <= threshold
// (|g| = 0 included). Returns the factor applied.
double clip_by_threshold(std::span<double> g, double threshold);

// CowClip: per touched column, clip_t = cnt * max(r * |w_column|, zeta).
void cowclip_inplace(const EmbeddingTable& table, SparseGradient& grad, double r, double zeta);
SparseGradient cowclip(const EmbeddingTable& table, const SparseGradient& grad, double r, double zeta);

// One threshold over the concatenation of every embedding gradient.
void clip_global(SparseGradient& grad, double clip_value);

// One threshold per field block. The threshold is clip_value scaled by the
// batch factor s (linear: s, sqrt: sqrt(s)).
void clip_fieldwise(SparseGradient& grad, double clip_value, double batch_factor = 1.0,
                    ClipScaleMode mode = ClipScaleMode::kSqrt);

// Constant threshold per column, no occurrence count.
void clip_columnwise(SparseGradient& grad, double clip_value);

// Per field: max(r * |whole field matrix|, zeta), no occurrence count.
void clip_adaptive_fieldwise(const EmbeddingTable& table, SparseGradient& grad, double r, double zeta);

// Dispatches on config.variant. Fieldwise clipping uses batch_factor 1: the
// caller passes an already scaled clip_value.
void apply_clip(const ClipConfig& config, const EmbeddingTable& table, SparseGradient& grad);

}  // namespace cowclip
