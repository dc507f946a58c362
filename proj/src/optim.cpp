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

#include "cowclip/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cowclip {

namespace {

std::span<double> span_of(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void check_same_shape(const DenseParams& params, const DenseParams& grads) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  if (p.size() != g.size()) throw std::invalid_argument("gradient tensor count mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]->rows() != g[i]->rows() || p[i]->cols() != g[i]->cols()) {
      throw std::invalid_argument("gradient tensor shape mismatch");
    }
  }
}

struct AdamCoefficients {
  double lr_t;     // lr / (1 - beta1^t)
  double inv_bc2;  // 1 / (1 - beta2^t)
};

AdamCoefficients coefficients(double lr, const AdamConfig& c, std::int64_t step) {
  if (!c.bias_correction) return {lr, 1.0};
  const double t = static_cast<double>(step);
  return {lr / (1.0 - std::pow(c.beta1, t)), 1.0 / (1.0 - std::pow(c.beta2, t))};
}

// One Adam coordinate update on g' = g + l2 * w.
inline void adam_coord(double& w, double g, double& m, double& v, double l2, const AdamConfig& c,
                       const AdamCoefficients& k) {
  const double gt = g + l2 * w;
  m = c.beta1 * m + (1.0 - c.beta1) * gt;
  v = c.beta2 * v + (1.0 - c.beta2) * gt * gt;
  w -= k.lr_t * m / (std::sqrt(v * k.inv_bc2) + c.eps);
}

void adam_l2_only(double* w, double* m, double* v, std::size_t n, double l2, const AdamConfig& c,
                  const AdamCoefficients& k) {
  for (std::size_t i = 0; i < n; ++i) adam_coord(w[i], 0.0, m[i], v[i], l2, c, k);
}

}  // namespace

void sgd_update(std::span<double> w, std::span<const double> g, double lr, double l2) {
  if (w.size() != g.size()) throw std::invalid_argument("sgd_update size mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (g[i] + l2 * w[i]);
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, double lr, double l2, const AdamConfig& config,
                 std::int64_t step) {
  if (w.size() != g.size() || w.size() != m.size() || w.size() != v.size()) {
    throw std::invalid_argument("adam_update size mismatch");
  }
  const auto k = coefficients(lr, config, step);
  for (std::size_t i = 0; i < w.size(); ++i) adam_coord(w[i], g[i], m[i], v[i], l2, config, k);
}

void sgd_step(DenseParams& params, const DenseParams& grads, double lr, double l2) {
  check_same_shape(params, grads);
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) sgd_update(span_of(*p[i]), span_of(*g[i]), lr, l2);
}

AdamState AdamState::zeros_like(const DenseParams& params) {
  AdamState s;
  for (const auto* t : params.tensors()) {
    s.m.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
    s.v.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
  }
  return s;
}

void adam_step(AdamState& state, DenseParams& params, const DenseParams& grads, double lr, double l2,
               const AdamConfig& config) {
  check_same_shape(params, grads);
  auto p = params.tensors();
  const auto g = grads.tensors();
  if (state.m.size() != p.size()) throw std::invalid_argument("adam state does not match params");
  ++state.t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    adam_update(span_of(*p[i]), span_of(*g[i]), span_of(state.m[i]), span_of(state.v[i]), lr, l2,
                config, state.t);
  }
}

TableAdamState TableAdamState::zeros_like(const EmbeddingTable& table) {
  TableAdamState s;
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    s.m.push_back(RowMatrix::Zero(table.vocab_size(f), table.dim()));
    s.v.push_back(RowMatrix::Zero(table.vocab_size(f), table.dim()));
  }
  return s;
}

void adam_sparse_step(TableAdamState& state, EmbeddingTable& table, const SparseGradient& grad,
                      double lr, double l2, bool dense_l2, const AdamConfig& config) {
  if (grad.fields.size() != table.n_fields() || state.m.size() != table.n_fields()) {
    throw std::invalid_argument("sparse gradient does not match table");
  }
  ++state.t;
  const auto k = coefficients(lr, config, state.t);
  const std::size_t dim = static_cast<std::size_t>(table.dim());
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    auto& w = table.field(f);
    auto& m = state.m[f];
    auto& v = state.v[f];
    const auto& fg = grad.fields[f];
    std::int64_t next_row = 0;
    for (std::size_t c = 0; c < fg.size(); ++c) {
      const std::int64_t id = fg.ids[c];
      if (id < next_row || id >= table.vocab_size(f)) {
        throw std::invalid_argument("sparse gradient ids must be unique, ascending and in range");
      }
      if (dense_l2 && id > next_row) {
        const std::size_t off = static_cast<std::size_t>(next_row) * dim;
        adam_l2_only(w.data() + off, m.data() + off, v.data() + off,
                     static_cast<std::size_t>(id - next_row) * dim, l2, config, k);
      }
      const std::size_t off = static_cast<std::size_t>(id) * dim;
      const double* g = fg.grads.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        adam_coord(w.data()[off + d], g[d], m.data()[off + d], v.data()[off + d], l2, config, k);
      }
      next_row = id + 1;
    }
    if (dense_l2 && next_row < table.vocab_size(f)) {
      const std::size_t off = static_cast<std::size_t>(next_row) * dim;
      adam_l2_only(w.data() + off, m.data() + off, v.data() + off,
                   static_cast<std::size_t>(table.vocab_size(f) - next_row) * dim, l2, config, k);
    }
  }
}

void sgd_sparse_step(EmbeddingTable& table, const SparseGradient& grad, double lr, double l2,
                     bool dense_l2) {
  if (grad.fields.size() != table.n_fields()) {
    throw std::invalid_argument("sparse gradient does not match table");
  }
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    auto& w = table.field(f);
    const auto& fg = grad.fields[f];
    if (dense_l2) {
      // Decay everything, then apply the data term to touched columns; the
      // result equals w - lr * (g + l2 * w) column by column.
      Eigen::MatrixXd touched(static_cast<Eigen::Index>(fg.size()), table.dim());
      for (std::size_t c = 0; c < fg.size(); ++c) touched.row(static_cast<Eigen::Index>(c)) = w.row(fg.ids[c]);
      w *= (1.0 - lr * l2);
      for (std::size_t c = 0; c < fg.size(); ++c) {
        const auto row = static_cast<Eigen::Index>(c);
        w.row(fg.ids[c]) = touched.row(row) - lr * (fg.grads.row(row) + l2 * touched.row(row));
      }
    } else {
      for (std::size_t c = 0; c < fg.size(); ++c) {
        const auto row = static_cast<Eigen::Index>(c);
        w.row(fg.ids[c]) -= lr * (fg.grads.row(row) + l2 * w.row(fg.ids[c]));
      }
    }
  }
}

WarmupScope parse_warmup_scope(std::string_view name) {
  if (name == "dense_only") return WarmupScope::kDenseOnly;
  if (name == "all") return WarmupScope::kAll;
  throw std::invalid_argument("unknown warmup scope '" + std::string(name) + "'");
}

std::string to_string(WarmupScope scope) {
  return scope == WarmupScope::kAll ? "all" : "dense_only";
}

double WarmupSchedule::lr(std::int64_t step) const {
  if (warmup_steps <= 0) return target_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return target_lr * std::min(1.0, frac);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> gradient_stream(std::uint64_t seed, const EquivalenceOptions& o) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(o.min_abs_grad, o.max_abs_grad);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> g(static_cast<std::size_t>(o.steps));
  for (auto& x : g) x = sign(rng) ? mag(rng) : -mag(rng);
  return g;
}

}  // namespace

double verify_adam_scaling_equivalence(double c, double l2, std::uint64_t seed,
                                       const EquivalenceOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("scale c must be > 0");
  const auto g = gradient_stream(seed, options);
  double wa = options.w0, ma = 0.0, va = 0.0;
  double wb = options.w0, mb = 0.0, vb = 0.0;
  double worst = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t) {
    const auto step = static_cast<std::int64_t>(t + 1);
    const double ga = c * g[t];
    adam_update({&wa, 1}, {&ga, 1}, {&ma, 1}, {&va, 1}, options.lr, l2, options.adam, step);
    adam_update({&wb, 1}, {&g[t], 1}, {&mb, 1}, {&vb, 1}, options.lr, l2 / c, options.adam, step);
    worst = std::max(worst, std::abs(wa - wb));
  }
  return worst;
}

double verify_sgd_scaling_equivalence(double c, double l2, std::uint64_t seed,
                                      const EquivalenceOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("scale c must be > 0");
  const auto g = gradient_stream(seed, options);
  double wa = options.w0;
  double wb = options.w0;
  double worst = 0.0;
  for (const double gt : g) {
    const double ga = c * gt;
    sgd_update({&wa, 1}, {&ga, 1}, options.lr, l2);
    sgd_update({&wb, 1}, {&gt, 1}, c * options.lr, l2 / c);
    worst = std::max(worst, std::abs(wa - wb));
  }
  return worst;
}

double adam_gradient_scale_invariance(double c, std::uint64_t seed, const EquivalenceOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("scale c must be > 0");
  const auto g = gradient_stream(seed, options);
  double w1 = options.w0, m1 = 0.0, v1 = 0.0;
  double wc = options.w0, mc = 0.0, vc = 0.0;
  double worst = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t) {
    const auto step = static_cast<std::int64_t>(t + 1);
    const double gc = c * g[t];
    adam_update({&w1, 1}, {&g[t], 1}, {&m1, 1}, {&v1, 1}, options.lr, 0.0, options.adam, step);
    adam_update({&wc, 1}, {&gc, 1}, {&mc, 1}, {&vc, 1}, options.lr, 0.0, options.adam, step);
    worst = std::max(worst, std::abs(w1 - wc));
  }
  return worst;
}

}  // namespace cowclip
