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

#include "cowclip/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cowclip {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "wd" || name == "w&d" || name == "widedeep" || name == "wide_deep") {
    return ModelKind::kWideDeep;
  }
  if (name == "deepfm") return ModelKind::kDeepFM;
  if (name == "dcn") return ModelKind::kDCN;
  if (name == "dcnv2" || name == "dcn_v2") return ModelKind::kDCNv2;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kWideDeep: return "wd";
    case ModelKind::kDeepFM: return "deepfm";
    case ModelKind::kDCN: return "dcn";
    case ModelKind::kDCNv2: return "dcnv2";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// DenseParams

std::vector<Eigen::MatrixXd*> DenseParams::tensors() {
  std::vector<Eigen::MatrixXd*> out;
  for (std::size_t l = 0; l < mlp_w.size(); ++l) {
    out.push_back(&mlp_w[l]);
    out.push_back(&mlp_b[l]);
  }
  for (std::size_t l = 0; l < cross_w.size(); ++l) {
    out.push_back(&cross_w[l]);
    out.push_back(&cross_b[l]);
  }
  if (cross_out.size() > 0) out.push_back(&cross_out);
  out.push_back(&bias);
  return out;
}

std::vector<const Eigen::MatrixXd*> DenseParams::tensors() const {
  auto mut = const_cast<DenseParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> DenseParams::tensor_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < mlp_w.size(); ++l) {
    out.push_back("mlp_w" + std::to_string(l));
    out.push_back("mlp_b" + std::to_string(l));
  }
  for (std::size_t l = 0; l < cross_w.size(); ++l) {
    out.push_back("cross_w" + std::to_string(l));
    out.push_back("cross_b" + std::to_string(l));
  }
  if (cross_out.size() > 0) out.push_back("cross_out");
  out.push_back("bias");
  return out;
}

DenseParams DenseParams::zeros_like() const {
  DenseParams z = *this;
  for (auto* t : z.tensors()) t->setZero();
  return z;
}

bool DenseParams::operator==(const DenseParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
  }
  return true;
}

Model init_model(const ModelConfig& config, std::span<const std::int64_t> vocab_sizes,
                 std::size_t n_dense, double init_sigma, std::uint64_t seed) {
  if (config.embed_dim < 1) throw std::invalid_argument("embed_dim must be >= 1");
  for (const int h : config.hidden) {
    if (h < 1) throw std::invalid_argument("hidden layer widths must be >= 1");
  }
  Model model;
  model.config = config;
  std::mt19937_64 rng(seed);
  const std::uint64_t embed_seed = rng();
  model.embeddings = init_table(vocab_sizes, config.embed_dim, init_sigma, embed_seed);
  if (model.has_wide()) {
    model.wide = EmbeddingTable({vocab_sizes.begin(), vocab_sizes.end()}, 1);
  }

  auto kaiming = [&rng](Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };

  const auto embed_width = static_cast<Eigen::Index>(vocab_sizes.size()) * config.embed_dim;
  Eigen::Index fan_in = embed_width + static_cast<Eigen::Index>(n_dense);
  std::vector<int> widths = config.hidden;
  widths.push_back(1);
  for (const int w : widths) {
    model.dense.mlp_w.push_back(kaiming(fan_in, w, fan_in));
    model.dense.mlp_b.push_back(Eigen::MatrixXd::Zero(1, w));
    fan_in = w;
  }
  if (model.has_cross()) {
    if (config.cross_depth < 0) throw std::invalid_argument("cross_depth must be >= 0");
    for (int l = 0; l < config.cross_depth; ++l) {
      if (config.kind == ModelKind::kDCN) {
        model.dense.cross_w.push_back(kaiming(embed_width, 1, embed_width));
      } else {
        model.dense.cross_w.push_back(kaiming(embed_width, embed_width, embed_width));
      }
      model.dense.cross_b.push_back(Eigen::MatrixXd::Zero(1, embed_width));
    }
    model.dense.cross_out = kaiming(embed_width, 1, embed_width);
  }
  return model;
}

// ---------------------------------------------------------------------------
// MLP

Eigen::VectorXd mlp_forward(std::span<const Eigen::MatrixXd> weights,
                            std::span<const Eigen::MatrixXd> biases, const Eigen::MatrixXd& input,
                            MlpCache* cache) {
  if (weights.empty() || weights.size() != biases.size()) {
    throw std::invalid_argument("mlp needs matching, non-empty weight and bias lists");
  }
  if (input.cols() != weights[0].rows()) {
    throw std::invalid_argument("mlp input width " + std::to_string(input.cols()) +
                                " does not match first layer fan-in " +
                                std::to_string(weights[0].rows()));
  }
  const std::size_t n_layers = weights.size();
  if (cache) {
    cache->input = input;
    cache->pre.assign(n_layers, {});
    cache->post.assign(n_layers - 1, {});
  }
  Eigen::MatrixXd h = input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (h.cols() != weights[l].rows() || biases[l].cols() != weights[l].cols()) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + " shape mismatch");
    }
    Eigen::MatrixXd pre = h * weights[l];
    pre.rowwise() += biases[l].row(0);
    if (l + 1 == n_layers) {
      if (pre.cols() != 1) throw std::invalid_argument("mlp output layer must have one unit");
      Eigen::VectorXd out = pre.col(0);
      if (cache) cache->pre[l] = std::move(pre);
      return out;
    }
    h = pre.cwiseMax(0.0);
    if (cache) {
      cache->pre[l] = std::move(pre);
      cache->post[l] = h;
    }
  }
  return {};
}

Eigen::MatrixXd mlp_backward(std::span<const Eigen::MatrixXd> weights, const MlpCache& cache,
                             const Eigen::VectorXd& upstream, double param_scale,
                             std::span<Eigen::MatrixXd> grad_w, std::span<Eigen::MatrixXd> grad_b) {
  const std::size_t n_layers = weights.size();
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::MatrixXd& h_prev = l == 0 ? cache.input : cache.post[l - 1];
    grad_w[l] = param_scale * (h_prev.transpose() * delta);
    grad_b[l] = param_scale * delta.colwise().sum();
    Eigen::MatrixXd d_h = delta * weights[l].transpose();
    if (l == 0) return d_h;
    delta = d_h.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return {};
}

// ---------------------------------------------------------------------------
// Heads

Eigen::VectorXd lr_head(double bias, const EmbeddingTable& wide, const LookupRecord& record) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(record.batch_size), bias);
  for (std::size_t i = 0; i < record.batch_size; ++i) {
    for (std::size_t f = 0; f < record.n_fields; ++f) {
      out[static_cast<Eigen::Index>(i)] += wide.field(f)(record.id(i, f), 0);
    }
  }
  return out;
}

Eigen::VectorXd fm_pairwise(const Eigen::MatrixXd& embedded, int n_fields, int dim) {
  if (embedded.cols() != static_cast<Eigen::Index>(n_fields) * dim) {
    throw std::invalid_argument("fm input width does not match fields x dim");
  }
  Eigen::VectorXd out(embedded.rows());
  for (Eigen::Index i = 0; i < embedded.rows(); ++i) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
    double sq = 0.0;
    for (int f = 0; f < n_fields; ++f) {
      const auto v = embedded.block(i, static_cast<Eigen::Index>(f) * dim, 1, dim);
      sum += v;
      sq += v.squaredNorm();
    }
    out[i] = 0.5 * (sum.squaredNorm() - sq);
  }
  return out;
}

Eigen::MatrixXd fm_pairwise_backward(const Eigen::MatrixXd& embedded, int n_fields, int dim,
                                     const Eigen::VectorXd& upstream) {
  Eigen::MatrixXd grad(embedded.rows(), embedded.cols());
  for (Eigen::Index i = 0; i < embedded.rows(); ++i) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
    for (int f = 0; f < n_fields; ++f) sum += embedded.block(i, static_cast<Eigen::Index>(f) * dim, 1, dim);
    for (int f = 0; f < n_fields; ++f) {
      const auto off = static_cast<Eigen::Index>(f) * dim;
      grad.block(i, off, 1, dim) = upstream[i] * (sum - embedded.block(i, off, 1, dim));
    }
  }
  return grad;
}

namespace {

void check_cross_shapes(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl, const Eigen::MatrixXd& w,
                        Eigen::Index w_cols) {
  if (x0.rows() != xl.rows() || x0.cols() != xl.cols() || w.rows() != x0.cols() || w.cols() != w_cols) {
    throw std::invalid_argument("cross layer shape mismatch");
  }
}

}  // namespace

Eigen::MatrixXd dcn_cross_layer(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                                const Eigen::MatrixXd& w, const Eigen::MatrixXd& b) {
  check_cross_shapes(x0, xl, w, 1);
  const Eigen::VectorXd s = xl * w;  // x_l^T w per row
  Eigen::MatrixXd out = x0.array().colwise() * s.array();
  out.rowwise() += b.row(0);
  out += xl;
  return out;
}

CrossGrad dcn_cross_backward(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                             const Eigen::MatrixXd& w, const Eigen::MatrixXd& d_out) {
  check_cross_shapes(x0, xl, w, 1);
  const Eigen::VectorXd s = xl * w;
  const Eigen::VectorXd t = d_out.cwiseProduct(x0).rowwise().sum();
  CrossGrad g;
  g.d_x0 = d_out.array().colwise() * s.array();
  g.d_xl = d_out + t * w.transpose();
  g.d_w = xl.transpose() * t;
  g.d_b = d_out.colwise().sum();
  return g;
}

Eigen::MatrixXd dcnv2_cross_layer(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                                  const Eigen::MatrixXd& w, const Eigen::MatrixXd& b) {
  check_cross_shapes(x0, xl, w, x0.cols());
  Eigen::MatrixXd z = xl * w.transpose();
  z.rowwise() += b.row(0);
  return x0.cwiseProduct(z) + xl;
}

CrossGrad dcnv2_cross_backward(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& xl,
                               const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& d_out) {
  check_cross_shapes(x0, xl, w, x0.cols());
  Eigen::MatrixXd z = xl * w.transpose();
  z.rowwise() += b.row(0);
  const Eigen::MatrixXd dz = d_out.cwiseProduct(x0);
  CrossGrad g;
  g.d_x0 = d_out.cwiseProduct(z);
  g.d_xl = d_out + dz * w;
  g.d_w = dz.transpose() * xl;
  g.d_b = dz.colwise().sum();
  return g;
}

// ---------------------------------------------------------------------------
// Whole model

Eigen::VectorXd batch_labels(const Dataset& dataset, const Batch& batch) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) y[static_cast<Eigen::Index>(i)] = dataset.label(batch.rows[i]);
  return y;
}

ForwardResult model_forward(const Model& model, const Dataset& dataset, const Batch& batch) {
  ForwardResult result;
  auto& cache = result.cache;
  auto lookup = lookup_forward(model.embeddings, dataset, batch);
  cache.lookup = std::move(lookup.record);
  cache.embedded = std::move(lookup.embedded);

  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto n_dense = static_cast<Eigen::Index>(dataset.n_dense());
  Eigen::MatrixXd deep_input(b, cache.embedded.cols() + n_dense);
  deep_input.leftCols(cache.embedded.cols()) = cache.embedded;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto d = dataset.dense(batch.rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < n_dense; ++k) deep_input(i, cache.embedded.cols() + k) = d[static_cast<std::size_t>(k)];
  }
  cache.logits = mlp_forward(model.dense.mlp_w, model.dense.mlp_b, deep_input, &cache.mlp);

  const int n_fields = static_cast<int>(model.embeddings.n_fields());
  const int dim = model.embeddings.dim();
  switch (model.config.kind) {
    case ModelKind::kWideDeep:
      cache.logits += lr_head(model.dense.bias(0, 0), model.wide, cache.lookup);
      break;
    case ModelKind::kDeepFM:
      cache.logits += lr_head(model.dense.bias(0, 0), model.wide, cache.lookup);
      cache.logits += fm_pairwise(cache.embedded, n_fields, dim);
      break;
    case ModelKind::kDCN:
    case ModelKind::kDCNv2: {
      cache.cross_x.clear();
      cache.cross_x.reserve(model.dense.cross_w.size() + 1);
      cache.cross_x.push_back(cache.embedded);
      const auto& x0 = cache.cross_x.front();
      for (std::size_t l = 0; l < model.dense.cross_w.size(); ++l) {
        const auto& xl = cache.cross_x.back();
        cache.cross_x.push_back(model.config.kind == ModelKind::kDCN
                                    ? dcn_cross_layer(x0, xl, model.dense.cross_w[l], model.dense.cross_b[l])
                                    : dcnv2_cross_layer(x0, xl, model.dense.cross_w[l], model.dense.cross_b[l]));
      }
      cache.logits += cache.cross_x.back() * model.dense.cross_out;
      cache.logits.array() += model.dense.bias(0, 0);
      break;
    }
  }
  cache.probs = (1.0 + (-cache.logits.array()).exp()).inverse().matrix();
  result.probs = cache.probs;
  return result;
}

ModelGradients loss_and_backward(const Model& model, const ForwardCache& cache,
                                 const Eigen::VectorXd& labels, double l2, L2Scope scope,
                                 double eps) {
  const Eigen::Index b = cache.probs.size();
  if (labels.size() != b) throw std::invalid_argument("labels do not match batch size");
  if (b == 0) throw std::invalid_argument("empty batch");
  const double inv_b = 1.0 / static_cast<double>(b);
  const int n_fields = static_cast<int>(model.embeddings.n_fields());
  const int dim = model.embeddings.dim();

  ModelGradients out;
  Eigen::VectorXd dz(b);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double p = cache.probs[i];
    const double y = labels[i];
    const double pc = std::clamp(p, eps, 1.0 - eps);
    loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    // The clamp is flat outside (eps, 1 - eps).
    dz[i] = (p > eps && p < 1.0 - eps) ? p - y : 0.0;
  }
  out.loss = loss * inv_b;

  out.dense = model.dense.zeros_like();
  out.dense.bias(0, 0) = dz.sum() * inv_b;
  const Eigen::MatrixXd d_input =
      mlp_backward(model.dense.mlp_w, cache.mlp, dz, inv_b, out.dense.mlp_w, out.dense.mlp_b);
  Eigen::MatrixXd d_embedded = d_input.leftCols(cache.embedded.cols());

  if (model.has_wide()) {
    const Eigen::MatrixXd upstream = dz.replicate(1, n_fields);
    out.wide = accumulate_gradients(cache.lookup, upstream, 1);
  }
  if (model.config.kind == ModelKind::kDeepFM) {
    d_embedded += fm_pairwise_backward(cache.embedded, n_fields, dim, dz);
  }
  if (model.has_cross()) {
    const auto& xs = cache.cross_x;
    const Eigen::MatrixXd& x0 = xs.front();
    out.dense.cross_out = inv_b * (xs.back().transpose() * dz);
    Eigen::MatrixXd d_x = dz * model.dense.cross_out.transpose();
    Eigen::MatrixXd d_x0 = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
    for (std::size_t l = model.dense.cross_w.size(); l-- > 0;) {
      const CrossGrad g = model.config.kind == ModelKind::kDCN
                              ? dcn_cross_backward(x0, xs[l], model.dense.cross_w[l], d_x)
                              : dcnv2_cross_backward(x0, xs[l], model.dense.cross_w[l],
                                                     model.dense.cross_b[l], d_x);
      out.dense.cross_w[l] = inv_b * g.d_w;
      out.dense.cross_b[l] = inv_b * g.d_b;
      d_x0 += g.d_x0;
      d_x = g.d_xl;
    }
    d_embedded += d_x + d_x0;
  }
  out.embeddings = accumulate_gradients(cache.lookup, d_embedded, dim);

  if (l2 != 0.0 && scope != L2Scope::kNone) {
    auto add_table = [&](const EmbeddingTable& table, SparseGradient& grad) {
      double sq = 0.0;
      for (std::size_t f = 0; f < table.n_fields(); ++f) sq += table.field(f).squaredNorm();
      out.loss += 0.5 * l2 * sq;
      for (std::size_t f = 0; f < grad.fields.size(); ++f) {
        auto& fg = grad.fields[f];
        for (std::size_t k = 0; k < fg.size(); ++k) {
          fg.grads.row(static_cast<Eigen::Index>(k)) += l2 * table.column(f, fg.ids[k]);
        }
      }
    };
    add_table(model.embeddings, out.embeddings);
    if (model.has_wide()) add_table(model.wide, out.wide);
    if (scope == L2Scope::kAll) {
      const auto params = model.dense.tensors();
      const auto grads = out.dense.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        out.loss += 0.5 * l2 * params[t]->squaredNorm();
        *grads[t] += l2 * *params[t];
      }
    }
  }
  return out;
}

}  // namespace cowclip
