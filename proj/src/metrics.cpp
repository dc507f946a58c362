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

#include "cowclip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cowclip/errors.hpp"

namespace cowclip {

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum of positives keeps tie ranks (i + j + 1) / 2 integral.
  std::int64_t n_pos = 0;
  std::int64_t rank_sum_x2 = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j share (i + 1 + j) / 2.
    const auto tied_rank_x2 = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        ++n_pos;
        rank_sum_x2 += tied_rank_x2;
      }
    }
    i = j;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC needs both positive and negative labels");
  // U = R_pos - n_pos (n_pos + 1) / 2, all doubled.
  const std::int64_t u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(std::span<const double> probs, std::span<const double> labels, double eps) {
  if (probs.size() != labels.size()) throw std::invalid_argument("probs and labels differ in length");
  if (probs.empty()) throw std::invalid_argument("logloss of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], eps, 1.0 - eps);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

EvalResult evaluate(std::span<const double> probs, std::span<const double> labels, double eps) {
  EvalResult r;
  r.n_samples = static_cast<std::int64_t>(labels.size());
  for (const double y : labels) (y > 0.5 ? r.n_positive : r.n_negative) += 1;
  r.auc = auc(probs, labels);
  r.logloss = logloss(probs, labels, eps);
  return r;
}

}  // namespace cowclip
