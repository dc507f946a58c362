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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cowclip/clip.hpp"
#include "cowclip/config.hpp"
#include "cowclip/data.hpp"
#include "cowclip/metrics.hpp"
#include "cowclip/models.hpp"
#include "cowclip/optim.hpp"
#include "cowclip/scaling.hpp"

namespace cowclip {

enum class DataSource { kSynthetic, kTsv, kCriteo, kContainer };
DataSource parse_data_source(std::string_view name);
std::string to_string(DataSource source);

enum class OptimizerKind { kAdam, kSgd };
OptimizerKind parse_optimizer_kind(std::string_view name);
std::string to_string(OptimizerKind kind);

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path path;
  std::optional<std::size_t> max_rows;
  TsvLayout layout;
  SyntheticSpec synthetic;
  std::size_t n_samples = 200000;
  // 0 disables the collapse.
  std::int64_t top_k = 0;
  double test_fraction = 0.1;
  std::uint64_t seed = 2024;
};

struct OptimConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  AdamConfig adam;
  double warmup_epochs = 1.0;
  WarmupScope warmup_scope = WarmupScope::kDenseOnly;
  bool dense_l2 = true;
  L2Scope l2_scope = L2Scope::kEmbeddings;
};

struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  // Unset: 1e-2 under CowClip clipping, 1e-4 otherwise.
  std::optional<double> init_sigma;
  BaseHyperparams base;
  OptimConfig opt;
  // Unset ("auto"): CowClip clipping under the cowclip rule, none otherwise.
  // Threshold parameters live in `base`.
  std::optional<ClipVariant> clip_variant;
  ScalingRule rule = ScalingRule::kNone;
  std::int64_t batch_size = 1024;
  std::int64_t epochs = 10;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> sweep_batches;
  std::vector<ScalingRule> sweep_rules;
  std::size_t eval_batch = 8192;
  // Rows of the training split scored for the epoch-0 train loss.
  std::size_t initial_loss_rows = 20000;
  std::filesystem::path output_dir = "runs";

  double resolved_init_sigma() const;
  ClipVariant resolved_clip_variant() const;
};

// Keys:
//   data.source data.path data.max_rows data.n_dense data.n_categorical
//   data.vocab data.zipf data.uniform data.interaction data.bias data.n_samples
//   data.top_k data.test_fraction data.seed
//   model.kind model.hidden model.cross_depth model.embed_dim model.init_sigma
//   opt.kind opt.beta1 opt.beta2 opt.eps opt.lr_dense opt.lr_embed opt.l2
//   opt.warmup_epochs opt.warmup_scope opt.dense_l2 opt.l2_scope
//   clip.variant clip.value clip.r clip.zeta clip.scale_mode
//   scale.rule scale.base_batch
//   train.batch_size train.epochs train.seed train.eval_batch
//   train.initial_loss_rows
//   sweep.batch_sizes sweep.rules
//   output.dir
// Unknown keys and invalid values throw std::invalid_argument.
ExperimentConfig experiment_from_config(const Config& config);
// Every key with its resolved value.
Config to_config(const ExperimentConfig& experiment);
void validate(const ExperimentConfig& experiment);

// ---------------------------------------------------------------------------
// Runs

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double test_auc = 0.0;
  double test_logloss = 0.0;
  double seconds = 0.0;
  std::int64_t steps = 0;
  bool operator==(const EpochRecord&) const = default;
};

struct RunRecord {
  std::string run_id;
  std::string model;
  std::string rule;
  std::int64_t batch_size = 0;
  std::uint64_t seed = 0;
  // Scaled values the run trained with.
  double eta_dense = 0.0;
  double eta_embed = 0.0;
  double l2 = 0.0;
  double clip_value = 0.0;
  EpochRecord initial;
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::string diagnostic;
  std::map<std::string, std::string> config;

  // Last evaluated epoch (the initial one when no epoch ran).
  const EpochRecord& final_epoch() const { return epochs.empty() ? initial : epochs.back(); }
  // Equality ignoring `seconds`.
  bool same_numbers(const RunRecord& other) const;
  bool operator==(const RunRecord&) const = default;
};

struct Splits {
  Dataset train;
  Dataset test;
};

// Loads or generates the dataset, applies top_k_collapse, splits.
Splits prepare_data(const DataConfig& data);

RunRecord train(const ExperimentConfig& config);
RunRecord train(const ExperimentConfig& config, const Splits& splits);

// Scores `dataset` in chunks of `chunk` rows.
EvalResult evaluate_model(const Model& model, const Dataset& dataset, std::size_t chunk);

struct SweepResult {
  std::vector<RunRecord> records;
  std::string table;
};

// One run per (batch size, rule) on a shared dataset.
SweepResult sweep(const ExperimentConfig& config, const std::vector<std::int64_t>& batch_sizes,
                  const std::vector<ScalingRule>& rules);

// ---------------------------------------------------------------------------
// Checks

struct GradCheckOptions {
  // Perturbation is rel_step * max(1, |theta|).
  double rel_step = 1e-4;
  // Relative error denominator floor.
  double abs_floor = 1e-4;
  // Configurations with a ReLU pre-activation closer than this to 0 are
  // redrawn.
  double kink_margin = 1e-3;
  double param_scale = 0.5;
  // Draw every parameter as zero instead.
  bool zero_weights = false;
};

struct GradCheckReport {
  ModelKind kind = ModelKind::kDeepFM;
  std::int64_t n_trials = 0;
  std::int64_t n_resampled = 0;
  std::map<std::string, double> max_rel_error;  // per tensor
  double overall = 0.0;
};

GradCheckReport grad_check(ModelKind kind, std::uint64_t seed, std::int64_t n_trials,
                           const GradCheckOptions& options = {});

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;
  std::string bound;
  bool passed = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

// adam-equivalence, sgd-equivalence, presence-prob, covariance,
// update-frequency, cowclip-contract.
const std::vector<std::string>& verify_suite_names();
// Empty selector runs every suite. Throws std::invalid_argument on an
// unknown name.
VerifyReport verify(const std::vector<std::string>& suites, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { kCsv, kJson, kTextTable };
ReportFormat parse_report_format(std::string_view name);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::string records_to_json(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_json(const std::string& text);
// Rules as rows, batch sizes as columns, AUC in percent and logloss.
std::string records_to_table(const std::vector<RunRecord>& records);

// Writes one file under `dir` (runs.csv, runs.json or runs.txt) and returns
// its path. Throws IoError when it cannot be written.
std::filesystem::path emit_report(const std::vector<RunRecord>& records, ReportFormat format,
                                  const std::filesystem::path& dir);

}  // namespace cowclip
