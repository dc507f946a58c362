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

#include <cstdint>
#include <span>

namespace cowclip {

struct EvalResult {
  double auc = 0.0;
  double logloss = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t n_positive = 0;
  std::int64_t n_negative = 0;
};

// Mann-Whitney AUC with average ranks for tied scores. Labels are 0/1.
// Throws UndefinedMetricError when only one class is present.
double auc(std::span<const double> scores, std::span<const double> labels);

// Mean cross-entropy on probabilities clamped to [eps, 1 - eps].
double logloss(std::span<const double> probs, std::span<const double> labels, double eps = 1e-7);

EvalResult evaluate(std::span<const double> probs, std::span<const double> labels, double eps = 1e-7);

}  // namespace cowclip
