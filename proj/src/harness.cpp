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

#include "cowclip/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cowclip/errors.hpp"

namespace cowclip {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

L2Scope parse_l2_scope(std::string_view name) {
  if (name == "none") return L2Scope::kNone;
  if (name == "embeddings") return L2Scope::kEmbeddings;
  if (name == "all") return L2Scope::kAll;
  throw std::invalid_argument("unknown L2 scope '" + std::string(name) + "'");
}

std::string to_string(L2Scope scope) {
  switch (scope) {
    case L2Scope::kNone: return "none";
    case L2Scope::kEmbeddings: return "embeddings";
    case L2Scope::kAll: return "all";
  }
  return "?";
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += items[i];
    } else {
      out += std::to_string(items[i]);
    }
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data.source",       "data.path",          "data.max_rows",     "data.n_dense",
      "data.n_categorical", "data.vocab",        "data.zipf",         "data.uniform",
      "data.interaction",  "data.bias",          "data.n_samples",    "data.top_k",
      "data.test_fraction", "data.seed",         "model.kind",        "model.hidden",
      "model.cross_depth", "model.embed_dim",    "model.init_sigma",  "opt.kind",
      "opt.beta1",         "opt.beta2",          "opt.eps",           "opt.lr_dense",
      "opt.lr_embed",      "opt.l2",             "opt.warmup_epochs", "opt.warmup_scope",
      "opt.dense_l2",      "opt.l2_scope",       "clip.variant",      "clip.value",
      "clip.r",            "clip.zeta",          "clip.scale_mode",   "scale.rule",
      "scale.base_batch",  "train.batch_size",   "train.epochs",      "train.seed",
      "train.eval_batch",  "train.initial_loss_rows", "sweep.batch_sizes", "sweep.rules",
      "output.dir"};
  return keys;
}

}  // namespace

DataSource parse_data_source(std::string_view name) {
  if (name == "synthetic") return DataSource::kSynthetic;
  if (name == "tsv") return DataSource::kTsv;
  if (name == "criteo") return DataSource::kCriteo;
  if (name == "container") return DataSource::kContainer;
  throw std::invalid_argument("unknown data source '" + std::string(name) + "'");
}

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::kSynthetic: return "synthetic";
    case DataSource::kTsv: return "tsv";
    case DataSource::kCriteo: return "criteo";
    case DataSource::kContainer: return "container";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

double ExperimentConfig::resolved_init_sigma() const {
  if (init_sigma) return *init_sigma;
  return resolved_clip_variant() == ClipVariant::kCowClip ? 1e-2 : 1e-4;
}

ClipVariant ExperimentConfig::resolved_clip_variant() const {
  if (clip_variant) return *clip_variant;
  return rule == ScalingRule::kCowClip ? ClipVariant::kCowClip : ClipVariant::kNone;
}

ExperimentConfig experiment_from_config(const Config& c) {
  for (const auto& [key, value] : c.entries()) {
    if (!known_keys().contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  ExperimentConfig e;
  auto& d = e.data;
  d.source = parse_data_source(c.get_string("data.source", "synthetic"));
  d.path = c.get_string("data.path", "");
  if (c.has("data.max_rows")) d.max_rows = static_cast<std::size_t>(c.get_int("data.max_rows", 0));
  d.layout.n_dense = static_cast<std::size_t>(c.get_int("data.n_dense", d.source == DataSource::kSynthetic ? 2 : 13));
  d.layout.n_categorical =
      static_cast<std::size_t>(c.get_int("data.n_categorical", d.source == DataSource::kSynthetic ? 6 : 26));
  d.synthetic.n_dense = d.layout.n_dense;
  d.synthetic.n_categorical = d.layout.n_categorical;
  d.synthetic.vocab_sizes = c.get_int_list("data.vocab", {10000});
  d.synthetic.zipf_exponent = c.get_double("data.zipf", 1.2);
  d.synthetic.uniform = c.get_bool("data.uniform", false);
  d.synthetic.click_model.interaction = c.get_double("data.interaction", 0.0);
  d.synthetic.click_model.bias = c.get_double("data.bias", 0.0);
  d.n_samples = static_cast<std::size_t>(c.get_int("data.n_samples", 200000));
  d.top_k = c.get_int("data.top_k", 0);
  d.test_fraction = c.get_double("data.test_fraction", 0.1);
  d.seed = static_cast<std::uint64_t>(c.get_int("data.seed", 2024));

  e.model.kind = parse_model_kind(c.get_string("model.kind", "deepfm"));
  const auto hidden = c.get_int_list("model.hidden", {400, 400, 400});
  e.model.hidden.assign(hidden.begin(), hidden.end());
  e.model.cross_depth = static_cast<int>(c.get_int("model.cross_depth", 3));
  e.model.embed_dim = static_cast<int>(c.get_int("model.embed_dim", 10));
  if (c.has("model.init_sigma")) e.init_sigma = c.get_double("model.init_sigma", 1e-4);

  e.opt.kind = parse_optimizer_kind(c.get_string("opt.kind", "adam"));
  e.opt.adam.beta1 = c.get_double("opt.beta1", 0.9);
  e.opt.adam.beta2 = c.get_double("opt.beta2", 0.999);
  e.opt.adam.eps = c.get_double("opt.eps", 1e-8);
  e.opt.warmup_epochs = c.get_double("opt.warmup_epochs", 1.0);
  e.opt.warmup_scope = parse_warmup_scope(c.get_string("opt.warmup_scope", "dense_only"));
  e.opt.dense_l2 = c.get_bool("opt.dense_l2", true);
  e.opt.l2_scope = parse_l2_scope(c.get_string("opt.l2_scope", "embeddings"));

  e.base.base_batch = c.get_int("scale.base_batch", 1024);
  e.base.eta_dense = c.get_double("opt.lr_dense", 1e-4);
  e.base.eta_embed = c.get_double("opt.lr_embed", 1e-4);
  e.base.l2 = c.get_double("opt.l2", 1e-4);
  e.base.clip_value = c.get_double("clip.value", 25.0);
  e.base.clip_scale = parse_clip_scale_mode(c.get_string("clip.scale_mode", "sqrt"));
  e.base.r = c.get_double("clip.r", 1.0);
  e.base.zeta = c.get_double("clip.zeta", 1e-4);
  const std::string variant = c.get_string("clip.variant", "auto");
  if (variant != "auto") e.clip_variant = parse_clip_variant(variant);
  e.rule = parse_scaling_rule(c.get_string("scale.rule", "none"));

  e.batch_size = c.get_int("train.batch_size", e.base.base_batch);
  e.epochs = c.get_int("train.epochs", 10);
  e.seed = static_cast<std::uint64_t>(c.get_int("train.seed", 0));
  e.eval_batch = static_cast<std::size_t>(c.get_int("train.eval_batch", 8192));
  e.initial_loss_rows = static_cast<std::size_t>(c.get_int("train.initial_loss_rows", 20000));

  e.sweep_batches = c.get_int_list("sweep.batch_sizes", {});
  for (const auto& name : c.get_list("sweep.rules", {})) e.sweep_rules.push_back(parse_scaling_rule(name));
  e.output_dir = c.get_string("output.dir", "runs");
  validate(e);
  return e;
}

Config to_config(const ExperimentConfig& e) {
  Config c;
  const auto& d = e.data;
  c.set("data.source", to_string(d.source));
  c.set("data.path", d.path.string());
  if (d.max_rows) c.set("data.max_rows", std::to_string(*d.max_rows));
  c.set("data.n_dense", std::to_string(d.layout.n_dense));
  c.set("data.n_categorical", std::to_string(d.layout.n_categorical));
  c.set("data.vocab", join(d.synthetic.vocab_sizes));
  c.set("data.zipf", format_double(d.synthetic.zipf_exponent));
  c.set("data.uniform", d.synthetic.uniform ? "true" : "false");
  c.set("data.interaction", format_double(d.synthetic.click_model.interaction));
  c.set("data.bias", format_double(d.synthetic.click_model.bias));
  c.set("data.n_samples", std::to_string(d.n_samples));
  c.set("data.top_k", std::to_string(d.top_k));
  c.set("data.test_fraction", format_double(d.test_fraction));
  c.set("data.seed", std::to_string(d.seed));
  c.set("model.kind", to_string(e.model.kind));
  c.set("model.hidden", join(e.model.hidden));
  c.set("model.cross_depth", std::to_string(e.model.cross_depth));
  c.set("model.embed_dim", std::to_string(e.model.embed_dim));
  c.set("model.init_sigma", format_double(e.resolved_init_sigma()));
  c.set("opt.kind", to_string(e.opt.kind));
  c.set("opt.beta1", format_double(e.opt.adam.beta1));
  c.set("opt.beta2", format_double(e.opt.adam.beta2));
  c.set("opt.eps", format_double(e.opt.adam.eps));
  c.set("opt.lr_dense", format_double(e.base.eta_dense));
  c.set("opt.lr_embed", format_double(e.base.eta_embed));
  c.set("opt.l2", format_double(e.base.l2));
  c.set("opt.warmup_epochs", format_double(e.opt.warmup_epochs));
  c.set("opt.warmup_scope", to_string(e.opt.warmup_scope));
  c.set("opt.dense_l2", e.opt.dense_l2 ? "true" : "false");
  c.set("opt.l2_scope", to_string(e.opt.l2_scope));
  c.set("clip.variant", to_string(e.resolved_clip_variant()));
  c.set("clip.value", format_double(e.base.clip_value));
  c.set("clip.r", format_double(e.base.r));
  c.set("clip.zeta", format_double(e.base.zeta));
  c.set("clip.scale_mode", to_string(e.base.clip_scale));
  c.set("scale.rule", to_string(e.rule));
  c.set("scale.base_batch", std::to_string(e.base.base_batch));
  c.set("train.batch_size", std::to_string(e.batch_size));
  c.set("train.epochs", std::to_string(e.epochs));
  c.set("train.seed", std::to_string(e.seed));
  c.set("train.eval_batch", std::to_string(e.eval_batch));
  c.set("train.initial_loss_rows", std::to_string(e.initial_loss_rows));
  if (!e.sweep_batches.empty()) c.set("sweep.batch_sizes", join(e.sweep_batches));
  if (!e.sweep_rules.empty()) {
    std::vector<std::string> names;
    for (const auto r : e.sweep_rules) names.push_back(to_string(r));
    c.set("sweep.rules", join(names));
  }
  c.set("output.dir", e.output_dir.string());
  return c;
}

void validate(const ExperimentConfig& e) {
  if (e.batch_size <= 0) throw std::invalid_argument("train.batch_size must be positive");
  for (const auto b : e.sweep_batches) {
    if (b <= 0) throw std::invalid_argument("sweep.batch_sizes must be positive");
  }
  if (e.epochs < 0) throw std::invalid_argument("train.epochs must be non-negative");
  if (e.eval_batch == 0) throw std::invalid_argument("train.eval_batch must be positive");
  if (!(e.data.test_fraction > 0.0 && e.data.test_fraction < 1.0)) {
    throw std::invalid_argument("data.test_fraction must lie in (0, 1)");
  }
  if (e.data.top_k < 0) throw std::invalid_argument("data.top_k must be non-negative");
  if (e.model.embed_dim < 1) throw std::invalid_argument("model.embed_dim must be positive");
  for (const int h : e.model.hidden) {
    if (h < 1) throw std::invalid_argument("model.hidden sizes must be positive");
  }
  if (e.model.cross_depth < 0) throw std::invalid_argument("model.cross_depth must be non-negative");
  if (!(e.resolved_init_sigma() > 0.0)) throw std::invalid_argument("model.init_sigma must be positive");
  if (!(e.opt.warmup_epochs >= 0.0)) throw std::invalid_argument("opt.warmup_epochs must be non-negative");
  validate(e.base);
  ClipConfig clip{e.resolved_clip_variant(), e.base.clip_value, e.base.r, e.base.zeta};
  validate(clip);
}

bool RunRecord::same_numbers(const RunRecord& other) const {
  auto strip = [](RunRecord r) {
    r.initial.seconds = 0.0;
    for (auto& ep : r.epochs) ep.seconds = 0.0;
    return r;
  };
  return strip(*this) == strip(other);
}

// ---------------------------------------------------------------------------

Splits prepare_data(const DataConfig& d) {
  Dataset full;
  switch (d.source) {
    case DataSource::kSynthetic: {
      full = generate_synthetic(d.synthetic, d.n_samples, d.seed);
      break;
    }
    case DataSource::kTsv: full = load_ctr_tsv(d.path, d.layout, d.max_rows); break;
    case DataSource::kCriteo: full = load_criteo_tsv(d.path, d.max_rows); break;
    case DataSource::kContainer: full = read_dataset(d.path); break;
  }
  if (d.top_k > 0) full = top_k_collapse(full, d.top_k);
  auto [train_set, test_set] = train_test_split(full, d.test_fraction, derive_seed(d.seed, 1));
  return {std::move(train_set), std::move(test_set)};
}

EvalResult evaluate_model(const Model& model, const Dataset& dataset, std::size_t chunk) {
  std::vector<double> probs;
  std::vector<double> labels;
  probs.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (std::size_t start = 0; start < dataset.size(); start += chunk) {
    Batch batch;
    for (std::size_t i = start; i < std::min(dataset.size(), start + chunk); ++i) batch.rows.push_back(i);
    const auto fwd = model_forward(model, dataset, batch);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      probs.push_back(fwd.probs(static_cast<Eigen::Index>(k)));
      labels.push_back(dataset.label(batch.rows[k]));
    }
  }
  EvalResult r;
  r.n_samples = static_cast<std::int64_t>(labels.size());
  for (const double y : labels) (y > 0.5 ? r.n_positive : r.n_negative) += 1;
  r.logloss = logloss(probs, labels);
  try {
    r.auc = auc(probs, labels);
  } catch (const UndefinedMetricError&) {
    r.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

RunRecord train(const ExperimentConfig& config) { return train(config, prepare_data(config.data)); }

RunRecord train(const ExperimentConfig& cfg, const Splits& splits) {
  validate(cfg);
  using Clock = std::chrono::steady_clock;
  const Dataset& train_set = splits.train;
  const Dataset& test_set = splits.test;
  if (train_set.empty() || test_set.empty()) throw std::invalid_argument("empty train or test split");
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  if (b > train_set.size()) throw std::invalid_argument("batch size exceeds the training split");

  const ScalingPlan plan = scale_to_batch(cfg.rule, cfg.base, cfg.batch_size);
  const ClipConfig clip{cfg.resolved_clip_variant(), plan.clip_value, plan.r, plan.zeta};

  RunRecord rec;
  rec.model = to_string(cfg.model.kind);
  rec.rule = to_string(cfg.rule);
  rec.batch_size = cfg.batch_size;
  rec.seed = cfg.seed;
  rec.run_id = rec.model + "-" + rec.rule + "-b" + std::to_string(cfg.batch_size) + "-s" + std::to_string(cfg.seed);
  rec.eta_dense = plan.eta_dense;
  rec.eta_embed = plan.eta_embed;
  rec.l2 = plan.l2;
  rec.clip_value = plan.clip_value;
  rec.config = to_config(cfg).entries();

  const auto vocab = train_set.vocab_sizes();
  Model model = init_model(cfg.model, vocab, train_set.n_dense(), cfg.resolved_init_sigma(),
                           derive_seed(cfg.seed, 2));

  auto initial_train_loss = [&] {
    const std::size_t n = std::min(train_set.size(), cfg.initial_loss_rows);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return evaluate_model(model, train_set.subset(rows), cfg.eval_batch).logloss;
  };

  auto t0 = Clock::now();
  {
    const EvalResult ev = evaluate_model(model, test_set, cfg.eval_batch);
    rec.initial.epoch = 0;
    rec.initial.train_loss = initial_train_loss();
    rec.initial.test_auc = ev.auc;
    rec.initial.test_logloss = ev.logloss;
    rec.initial.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  }

  BatchIterator batches(train_set.size(), b, BatchMode::kShuffleEpoch, derive_seed(cfg.seed, 3));
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>(batches.batches_per_epoch());
  const WarmupSchedule warmup{
      plan.eta_dense, std::llround(cfg.opt.warmup_epochs * static_cast<double>(steps_per_epoch)),
      cfg.opt.warmup_scope};
  const double dense_l2 = cfg.opt.l2_scope == L2Scope::kAll ? plan.l2 : 0.0;
  const double embed_l2 = cfg.opt.l2_scope == L2Scope::kNone ? 0.0 : plan.l2;

  AdamState dense_state = AdamState::zeros_like(model.dense);
  TableAdamState embed_state = TableAdamState::zeros_like(model.embeddings);
  TableAdamState wide_state;
  if (model.has_wide()) wide_state = TableAdamState::zeros_like(model.wide);

  std::int64_t step = 0;
  int over_epochs = 0;
  for (std::int64_t epoch = 1; epoch <= cfg.epochs && !rec.diverged; ++epoch) {
    t0 = Clock::now();
    double loss_sum = 0.0;
    std::int64_t epoch_steps = 0;
    while (auto batch = batches.next()) {
      ++step;
      const auto fwd = model_forward(model, train_set, *batch);
      const Eigen::VectorXd labels = batch_labels(train_set, *batch);
      // L2 enters inside the optimizer, after clipping.
      ModelGradients grads = loss_and_backward(model, fwd.cache, labels, 0.0, L2Scope::kNone);
      if (!std::isfinite(grads.loss)) {
        rec.diverged = true;
        rec.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(step);
        break;
      }
      loss_sum += grads.loss;
      ++epoch_steps;
      apply_clip(clip, model.embeddings, grads.embeddings);

      const double lr_dense = warmup.lr(step);
      const double lr_embed = warmup.scope == WarmupScope::kAll
                                  ? WarmupSchedule{plan.eta_embed, warmup.warmup_steps, warmup.scope}.lr(step)
                                  : plan.eta_embed;
      if (cfg.opt.kind == OptimizerKind::kAdam) {
        adam_step(dense_state, model.dense, grads.dense, lr_dense, dense_l2, cfg.opt.adam);
        adam_sparse_step(embed_state, model.embeddings, grads.embeddings, lr_embed, embed_l2,
                         cfg.opt.dense_l2, cfg.opt.adam);
        if (model.has_wide()) {
          adam_sparse_step(wide_state, model.wide, grads.wide, lr_embed, embed_l2, cfg.opt.dense_l2,
                           cfg.opt.adam);
        }
      } else {
        sgd_step(model.dense, grads.dense, lr_dense, dense_l2);
        sgd_sparse_step(model.embeddings, grads.embeddings, lr_embed, embed_l2, cfg.opt.dense_l2);
        if (model.has_wide()) sgd_sparse_step(model.wide, grads.wide, lr_embed, embed_l2, cfg.opt.dense_l2);
      }
    }
    if (rec.diverged) break;

    EpochRecord ep;
    ep.epoch = epoch;
    ep.steps = epoch_steps;
    ep.train_loss = loss_sum / static_cast<double>(std::max<std::int64_t>(1, epoch_steps));
    const EvalResult ev = evaluate_model(model, test_set, cfg.eval_batch);
    ep.test_auc = ev.auc;
    ep.test_logloss = ev.logloss;
    ep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.epochs.push_back(ep);

    if (!std::isfinite(ev.logloss)) {
      rec.diverged = true;
      rec.diagnostic = "non-finite test loss at epoch " + std::to_string(epoch);
    } else if (ep.train_loss > 10.0 * rec.initial.train_loss) {
      if (++over_epochs >= 3) {
        rec.diverged = true;
        rec.diagnostic = "train loss above 10x its initial value for 3 epochs";
      }
    } else {
      over_epochs = 0;
    }
  }
  return rec;
}

SweepResult sweep(const ExperimentConfig& config, const std::vector<std::int64_t>& batch_sizes,
                  const std::vector<ScalingRule>& rules) {
  if (batch_sizes.empty() || rules.empty()) throw std::invalid_argument("sweep needs batch sizes and rules");
  const Splits splits = prepare_data(config.data);
  SweepResult out;
  for (const auto rule : rules) {
    for (const auto b : batch_sizes) {
      ExperimentConfig run = config;
      run.rule = rule;
      run.batch_size = b;
      out.records.push_back(train(run, splits));
    }
  }
  out.table = records_to_table(out.records);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference check

namespace {

struct GradProblem {
  Model model;
  Dataset data;
  Batch batch;
  double l2 = 0.0;
  L2Scope scope = L2Scope::kNone;
};

double problem_loss(const GradProblem& p) {
  const auto fwd = model_forward(p.model, p.data, p.batch);
  return loss_and_backward(p.model, fwd.cache, batch_labels(p.data, p.batch), p.l2, p.scope).loss;
}

GradProblem draw_problem(ModelKind kind, std::mt19937_64& rng, const GradCheckOptions& o) {
  std::uniform_int_distribution<int> pick(0, 1 << 20);
  auto in = [&](int lo, int hi) { return lo + pick(rng) % (hi - lo + 1); };
  std::normal_distribution<double> normal(0.0, o.param_scale);

  GradProblem p;
  const int n_fields = in(2, 4);
  const int n_dense = in(0, 2);
  const int dim = in(2, 4);
  std::vector<FieldSchema> schema;
  for (int j = 0; j < n_dense; ++j) schema.push_back({FieldKind::kDense, 0, "d" + std::to_string(j)});
  std::vector<std::int64_t> vocab;
  for (int j = 0; j < n_fields; ++j) {
    vocab.push_back(in(2, 5));
    schema.push_back({FieldKind::kCategorical, vocab.back(), "c" + std::to_string(j)});
  }
  p.data = Dataset(schema);
  const int n = in(3, 6);
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.label = in(0, 1);
    for (int j = 0; j < n_dense; ++j) s.dense.push_back(std::normal_distribution<double>(0.0, 1.0)(rng));
    for (int j = 0; j < n_fields; ++j) s.ids.push_back(static_cast<std::int32_t>(in(0, static_cast<int>(vocab[j]) - 1)));
    p.data.append(s);
    p.batch.rows.push_back(static_cast<std::size_t>(i));
  }

  ModelConfig mc;
  mc.kind = kind;
  mc.embed_dim = dim;
  mc.hidden.clear();
  for (int l = in(1, 2); l > 0; --l) mc.hidden.push_back(in(2, 6));
  mc.cross_depth = in(1, 3);
  p.model = init_model(mc, vocab, static_cast<std::size_t>(n_dense), 0.1, rng());
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = o.zero_weights ? 0.0 : normal(rng);
  };
  for (auto* t : p.model.dense.tensors()) fill(*t);
  // Fan-in scaling keeps deep cross stacks at unit magnitude.
  for (auto& w : p.model.dense.cross_w) w /= std::sqrt(static_cast<double>(w.rows()));
  for (std::size_t f = 0; f < p.model.embeddings.n_fields(); ++f) fill(p.model.embeddings.field(f));
  for (std::size_t f = 0; f < p.model.wide.n_fields(); ++f) fill(p.model.wide.field(f));

  p.l2 = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
  p.scope = static_cast<L2Scope>(in(0, 2));
  return p;
}

bool near_kink(const GradProblem& p, const GradCheckOptions& o) {
  const auto fwd = model_forward(p.model, p.data, p.batch);
  const auto& pre = fwd.cache.mlp.pre;
  for (std::size_t l = 0; l + 1 < pre.size(); ++l) {
    if ((pre[l].array().abs() < o.kink_margin).any()) return true;
  }
  return ((fwd.probs.array() < 1e-6) || (fwd.probs.array() > 1.0 - 1e-6)).any();
}

}  // namespace

GradCheckReport grad_check(ModelKind kind, std::uint64_t seed, std::int64_t n_trials,
                           const GradCheckOptions& o) {
  GradCheckReport report;
  report.kind = kind;
  report.n_trials = n_trials;
  std::mt19937_64 rng(seed);

  auto record = [&](const std::string& name, double analytic, double numeric) {
    const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), o.abs_floor});
    auto& slot = report.max_rel_error[name];
    slot = std::max(slot, err);
    report.overall = std::max(report.overall, err);
  };

  for (std::int64_t trial = 0; trial < n_trials; ++trial) {
    GradProblem p = draw_problem(kind, rng, o);
    while (!o.zero_weights && near_kink(p, o)) {
      ++report.n_resampled;
      p = draw_problem(kind, rng, o);
    }
    const auto fwd = model_forward(p.model, p.data, p.batch);
    const ModelGradients g =
        loss_and_backward(p.model, fwd.cache, batch_labels(p.data, p.batch), p.l2, p.scope);

    auto numeric = [&](double& theta) {
      const double h = o.rel_step * std::max(1.0, std::abs(theta));
      const double saved = theta;
      theta = saved + h;
      const double up = problem_loss(p);
      theta = saved - h;
      const double down = problem_loss(p);
      theta = saved;
      return (up - down) / (2.0 * h);
    };

    const auto names = p.model.dense.tensor_names();
    auto params = p.model.dense.tensors();
    const auto grads = g.dense.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (Eigen::Index i = 0; i < params[t]->size(); ++i) {
        record(names[t], grads[t]->data()[i], numeric(params[t]->data()[i]));
      }
    }
    auto check_table = [&](EmbeddingTable& table, const SparseGradient& sg, const std::string& label) {
      for (std::size_t f = 0; f < sg.fields.size(); ++f) {
        const auto& fg = sg.fields[f];
        for (std::size_t k = 0; k < fg.ids.size(); ++k) {
          for (int c = 0; c < sg.dim; ++c) {
            double& theta = table.field(f)(fg.ids[k], c);
            record(label + "[" + std::to_string(f) + "]", fg.grads(static_cast<Eigen::Index>(k), c), numeric(theta));
          }
        }
      }
    };
    check_table(p.model.embeddings, g.embeddings, "embedding");
    if (p.model.has_wide()) check_table(p.model.wide, g.wide, "wide");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Verification suites

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"adam-equivalence", "sgd-equivalence", "presence-prob",
                                              "covariance",       "update-frequency", "cowclip-contract"};
  return names;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void suite_adam(VerifyReport& r, std::uint64_t seed) {
  for (const double c : {2.0, 10.0, 100.0}) {
    const double v = verify_adam_scaling_equivalence(c, 1e-4, derive_seed(seed, 10));
    r.checks.push_back({"adam-equivalence", "c=" + fmt(c) + " max|wA-wB|", v, "< 1e-6", v < 1e-6});
  }
}

void suite_sgd(VerifyReport& r, std::uint64_t seed) {
  for (const double c : {2.0, 10.0, 100.0}) {
    const double v = verify_sgd_scaling_equivalence(c, 1e-4, derive_seed(seed, 11));
    r.checks.push_back({"sgd-equivalence", "c=" + fmt(c) + " max|wA-wB|", v, "<= 1e-15", v <= 1e-15});
  }
}

void suite_presence(VerifyReport& r, std::uint64_t seed) {
  // One categorical field; id 1 sits in round(p * N) rows, id 0 elsewhere.
  constexpr std::size_t kRows = 10000;
  std::uint64_t stream = 100;
  for (const double p : {1e-4, 1e-2, 0.5}) {
    Dataset ds({FieldSchema{FieldKind::kCategorical, 2, "f"}});
    ds.reserve(kRows);
    const auto marked = static_cast<std::size_t>(std::llround(p * kRows));
    for (std::size_t i = 0; i < kRows; ++i) ds.append(Sample{0, {}, {i < marked ? 1 : 0}});
    for (const std::int64_t b : {64, 4096}) {
      const auto n_batches = static_cast<std::int64_t>(
          std::clamp<double>(1.28e6 / static_cast<double>(b), 4000.0, 20000.0));
      auto it = make_batches(ds, static_cast<std::size_t>(b), BatchMode::kWithReplacement, derive_seed(seed, stream++));
      std::int64_t hits = 0;
      for (std::int64_t t = 0; t < n_batches; ++t) {
        const auto batch = it.next();
        bool present = false;
        for (const auto row : batch->rows) present = present || ds.ids(row)[0] == 1;
        hits += present;
      }
      const double empirical = static_cast<double>(hits) / static_cast<double>(n_batches);
      const double exact = batch_presence_probability(p, b, PresenceMode::kExact);
      const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n_batches));
      const double dev = std::abs(empirical - exact);
      r.checks.push_back({"presence-prob", "p=" + fmt(p) + " b=" + std::to_string(b) + " |emp-exact|", dev,
                          "<= 3 SE = " + fmt(3.0 * se), dev <= 3.0 * se});
    }
  }
  double worst = 0.0;
  for (const double p : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5}) {
    for (const std::int64_t b : {1, 2, 16, 64, 256, 1000, 1024, 4096, 65536}) {
      if (static_cast<double>(b) * p > 0.1) continue;
      const double exact = batch_presence_probability(p, b, PresenceMode::kExact);
      const double approx = batch_presence_probability(p, b, PresenceMode::kApprox);
      worst = std::max(worst, std::abs(approx - exact) / exact);
    }
  }
  r.checks.push_back({"presence-prob", "max rel err of b*p for b*p <= 0.1", worst, "< 0.06", worst < 0.06});
}

void suite_covariance(VerifyReport& r, std::uint64_t seed) {
  const QuadraticProblem problem;
  constexpr std::int64_t kTrials = 20000;
  const Eigen::MatrixXd small = estimate_update_covariance(problem, 64, 0.1, kTrials, derive_seed(seed, 20));
  const Eigen::MatrixXd big = estimate_update_covariance(problem, 256, 0.2, kTrials, derive_seed(seed, 21));
  const double ratio = big.trace() / small.trace();
  r.checks.push_back({"covariance", "tr Cov(4b, 2eta) / tr Cov(b, eta)", ratio, "in [0.9, 1.1]",
                      ratio >= 0.9 && ratio <= 1.1});
  const double fit = small.trace() / predicted_update_covariance(problem, 64, 0.1).trace();
  r.checks.push_back({"covariance", "tr Cov(b, eta) / closed form", fit, "in [0.9, 1.1]", fit >= 0.9 && fit <= 1.1});
}

void suite_update_frequency(VerifyReport& r, std::uint64_t seed) {
  constexpr double kP = 1e-4;
  constexpr std::int64_t kB = 64;
  constexpr std::int64_t kS = 16;
  constexpr std::int64_t kTrials = 200000;
  const double eta = 1e-3;
  const auto fixed = expected_update_frequency_check(kP, kB, kS, eta, eta, kTrials, derive_seed(seed, 30));
  r.checks.push_back({"update-frequency", "E[big] / E[s small], same lr", fixed.ratio(), "in [0.9, 1.1]",
                      fixed.ratio() >= 0.9 && fixed.ratio() <= 1.1});
  const auto linear =
      expected_update_frequency_check(kP, kB, kS, eta, eta * kS, kTrials, derive_seed(seed, 31));
  const double lo = 0.85 * kS;
  const double hi = 1.15 * kS;
  r.checks.push_back({"update-frequency", "E[big] / E[s small], lr x s", linear.ratio(),
                      "in [" + fmt(lo) + ", " + fmt(hi) + "]", linear.ratio() >= lo && linear.ratio() <= hi});
}

void suite_cowclip(VerifyReport& r, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 40));
  std::uniform_real_distribution<double> log10(-6.0, 2.0);
  std::uniform_int_distribution<int> dim_dist(1, 16);
  std::uniform_int_distribution<int> cnt_dist(1, 64);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rs[] = {0.1, 1.0, 10.0};
  const double zetas[] = {1e-5, 1e-4, 1e-3};
  std::int64_t bound_bad = 0;
  std::int64_t direction_bad = 0;
  std::int64_t untouched_bad = 0;
  std::int64_t idempotence_bad = 0;
  constexpr int kTriples = 10000;
  for (int t = 0; t < kTriples; ++t) {
    const int dim = dim_dist(rng);
    const double w_scale = std::pow(10.0, log10(rng));
    const double g_scale = std::pow(10.0, log10(rng));
    const int cnt = cnt_dist(rng);
    const double r_val = rs[rng() % 3];
    const double zeta = zetas[rng() % 3];
    EmbeddingTable table({1}, dim);
    SparseGradient grad{dim, {FieldGradient{{0}, {cnt}, RowMatrix(1, dim)}}};
    for (int c = 0; c < dim; ++c) {
      table.field(0)(0, c) = w_scale * normal(rng);
      grad.fields[0].grads(0, c) = g_scale * normal(rng);
    }
    const SparseGradient original = grad;
    cowclip_inplace(table, grad, r_val, zeta);

    double w2 = 0.0, g2 = 0.0, c2 = 0.0, dot = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double w = table.field(0)(0, c);
      const double g = original.fields[0].grads(0, c);
      const double gc = grad.fields[0].grads(0, c);
      w2 += w * w;
      g2 += g * g;
      c2 += gc * gc;
      dot += g * gc;
    }
    const double threshold = cnt * std::max(r_val * std::sqrt(w2), zeta);
    if (std::sqrt(c2) > threshold + 1e-12) ++bound_bad;
    // Parallel and same orientation: cos = 1.
    if (g2 > 0.0 && (dot <= 0.0 || std::abs(dot / std::sqrt(g2 * c2) - 1.0) > 1e-12)) ++direction_bad;
    if (std::sqrt(g2) <= threshold && !(grad == original)) ++untouched_bad;
    SparseGradient again = grad;
    cowclip_inplace(table, again, r_val, zeta);
    if (!(again == grad)) ++idempotence_bad;
  }
  auto add = [&](const std::string& name, std::int64_t bad) {
    r.checks.push_back({"cowclip-contract", name + " violations in 1e4 triples", static_cast<double>(bad), "== 0",
                        bad == 0});
  };
  add("norm bound", bound_bad);
  add("direction", direction_bad);
  add("under-threshold identity", untouched_bad);
  add("idempotence", idempotence_bad);
}

}  // namespace

VerifyReport verify(const std::vector<std::string>& suites, std::uint64_t seed) {
  const auto& all = verify_suite_names();
  for (const auto& s : suites) {
    if (std::find(all.begin(), all.end(), s) == all.end()) {
      throw std::invalid_argument("unknown verify suite '" + s + "'");
    }
  }
  const auto& selected = suites.empty() ? all : suites;
  VerifyReport report;
  for (const auto& s : selected) {
    if (s == "adam-equivalence") suite_adam(report, seed);
    if (s == "sgd-equivalence") suite_sgd(report, seed);
    if (s == "presence-prob") suite_presence(report, seed);
    if (s == "covariance") suite_covariance(report, seed);
    if (s == "update-frequency") suite_update_frequency(report, seed);
    if (s == "cowclip-contract") suite_cowclip(report, seed);
  }
  return report;
}

}  // namespace cowclip
