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

// cowclip-lab: command line front end.
//
//   gen-data      write a synthetic dataset container
//   analyze-freq  id frequency and batch-presence statistics
//   scale         scaled hyperparameters for a rule and batch size
//   train         one training run
//   sweep         batch sizes x rules
//   grad-check    finite-difference check of the model gradients
//   verify        numerical property suites
//
// Exit codes: 0 success, 1 verification failure, 2 divergence, 3 usage or
// input error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cowclip/data.hpp"
#include "cowclip/errors.hpp"
#include "cowclip/harness.hpp"
#include "cowclip/scaling.hpp"
#include "json.hpp"

namespace {

using namespace cowclip;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "flat key = value config file");
  cmd->add_option("--seed", c.seed, "seed");
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
}

Config load_config(const Common& c) {
  Config config;
  if (!c.config_path.empty()) config = Config::load(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

void print_epoch(const EpochRecord& e) {
  std::printf("epoch %3lld  steps %6lld  train_loss %-12s test_auc %-12s test_logloss %-12s (%.2fs)\n",
              static_cast<long long>(e.epoch), static_cast<long long>(e.steps), num(e.train_loss).c_str(),
              num(e.test_auc).c_str(), num(e.test_logloss).c_str(), e.seconds);
}

void write_reports(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  for (const auto f : {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kTextTable}) {
    std::printf("wrote %s\n", emit_report(records, f, dir).string().c_str());
  }
}

int cmd_gen_data(const Common& c, const std::string& out) {
  Config config = load_config(c);
  if (c.seed) config.set("data.seed", std::to_string(*c.seed));
  const auto e = experiment_from_config(config);
  const Dataset ds = generate_synthetic(e.data.synthetic, e.data.n_samples, e.data.seed);
  write_dataset(out, ds);
  std::printf("wrote %zu rows (%zu dense, %zu categorical fields) to %s\n", ds.size(), ds.n_dense(),
              ds.n_categorical(), out.c_str());
  return 0;
}

int cmd_analyze_freq(const Common& c, const std::string& data_path, const std::vector<std::int64_t>& batches,
                     std::int64_t top) {
  Config config = load_config(c);
  if (c.seed) config.set("data.seed", std::to_string(*c.seed));
  const auto e = experiment_from_config(config);
  Dataset ds;
  if (!data_path.empty()) {
    ds = read_dataset(data_path);
  } else {
    ds = generate_synthetic(e.data.synthetic, e.data.n_samples, e.data.seed);
    if (e.data.top_k > 0) ds = top_k_collapse(ds, e.data.top_k);
  }
  const FrequencyTable freq = count_frequencies(ds);
  std::printf("samples %zu\n", ds.size());
  for (std::size_t f = 0; f < freq.n_fields(); ++f) {
    const auto& counts = freq.counts(f);
    std::vector<std::int64_t> sorted(counts.begin(), counts.end());
    std::sort(sorted.rbegin(), sorted.rend());
    const auto seen = std::count_if(counts.begin(), counts.end(), [](std::int64_t n) { return n > 0; });
    std::printf("field %s: vocab %lld, seen %lld, top p:", ds.schema()[ds.n_dense() + f].name.c_str(),
                static_cast<long long>(counts.size()), static_cast<long long>(seen));
    for (std::int64_t k = 0; k < std::min<std::int64_t>(top, static_cast<std::int64_t>(sorted.size())); ++k) {
      std::printf(" %.4g", static_cast<double>(sorted[static_cast<std::size_t>(k)]) / static_cast<double>(ds.size()));
    }
    std::printf("\n");
    for (const auto b : batches) {
      // Share of seen ids whose expected count per batch is below one, and
      // mean presence probability over seen ids.
      std::int64_t rare = 0;
      double presence = 0.0;
      for (std::size_t id = 0; id < counts.size(); ++id) {
        if (counts[id] == 0) continue;
        const double p = freq.probability(f, static_cast<std::int64_t>(id));
        rare += p * static_cast<double>(b) < 1.0;
        presence += batch_presence_probability(p, b, PresenceMode::kExact);
      }
      std::printf("  b=%-6lld ids with b*p < 1: %.4f   mean presence: %.4f\n", static_cast<long long>(b),
                  static_cast<double>(rare) / static_cast<double>(std::max<std::int64_t>(1, seen)),
                  presence / static_cast<double>(std::max<std::int64_t>(1, seen)));
    }
  }
  return 0;
}

struct ScaleArgs {
  std::string rule = "cowclip";
  std::int64_t base_batch = 1024;
  std::int64_t target_batch = 1024;
  double eta = 1e-4;
  std::optional<double> eta_embed;
  double lambda = 1e-4;
  double clip_value = 25.0;
  std::string clip_scale = "sqrt";
  double r = 1.0;
  double zeta = 1e-4;
  std::string preset;
};

int cmd_scale(const ScaleArgs& a) {
  if (!a.preset.empty()) {
    const auto& p = preset_schedule(a.preset);
    std::printf("preset %s (rule %s)\n", p.name.c_str(), to_string(p.rule).c_str());
    std::printf("%-8s %-12s %-12s %-12s %-6s %-8s notes\n", "batch", "eta_dense", "eta_embed", "l2", "r", "zeta");
    for (const auto& row : p.rows) {
      std::string notes;
      if (row.l2_tuned) notes += " l2:tuned";
      if (row.eta_dense_tuned) notes += " eta_dense:tuned";
      if (row.l2_corrected) notes += " l2:corrected";
      if (row.eta_dense_corrected) notes += " eta_dense:corrected";
      std::printf("%-8lld %-12.6g %-12.6g %-12.6g %-6g %-8g%s\n", static_cast<long long>(row.batch), row.eta_dense,
                  row.eta_embed, row.l2, row.r, row.zeta, notes.c_str());
    }
    return 0;
  }
  BaseHyperparams base;
  base.base_batch = a.base_batch;
  base.eta_dense = a.eta;
  base.eta_embed = a.eta_embed.value_or(a.eta);
  base.l2 = a.lambda;
  base.clip_value = a.clip_value;
  base.clip_scale = parse_clip_scale_mode(a.clip_scale);
  base.r = a.r;
  base.zeta = a.zeta;
  const ScalingPlan plan = scale_to_batch(parse_scaling_rule(a.rule), base, a.target_batch);
  std::printf("%-12s %s\n", "rule", to_string(plan.rule).c_str());
  std::printf("%-12s %s\n", "factor", num(plan.factor).c_str());
  std::printf("%-12s %lld\n", "batch", static_cast<long long>(plan.target_batch));
  std::printf("%-12s %s\n", "eta_dense", num(plan.eta_dense).c_str());
  std::printf("%-12s %s\n", "eta_embed", num(plan.eta_embed).c_str());
  std::printf("%-12s %s\n", "l2", num(plan.l2).c_str());
  std::printf("%-12s %s\n", "clip_value", num(plan.clip_value).c_str());
  std::printf("%-12s %s\n", "r", num(plan.r).c_str());
  std::printf("%-12s %s\n", "zeta", num(plan.zeta).c_str());
  const nlohmann::json record{{"rule", to_string(plan.rule)},   {"factor", plan.factor},
                              {"base_batch", base.base_batch},   {"target_batch", plan.target_batch},
                              {"eta_dense", plan.eta_dense},     {"eta_embed", plan.eta_embed},
                              {"l2", plan.l2},                   {"clip_value", plan.clip_value},
                              {"clip_scale", to_string(plan.clip_scale)}, {"r", plan.r},
                              {"zeta", plan.zeta}};
  std::printf("%s\n", record.dump().c_str());
  return 0;
}

int cmd_train(const Common& c) {
  Config config = load_config(c);
  if (c.seed) config.set("train.seed", std::to_string(*c.seed));
  const auto e = experiment_from_config(config);
  const RunRecord rec = train(e);
  std::printf("%s  eta_dense %s  eta_embed %s  l2 %s\n", rec.run_id.c_str(), num(rec.eta_dense).c_str(),
              num(rec.eta_embed).c_str(), num(rec.l2).c_str());
  print_epoch(rec.initial);
  for (const auto& ep : rec.epochs) print_epoch(ep);
  write_reports({rec}, e.output_dir);
  if (rec.diverged) {
    std::printf("diverged: %s\n", rec.diagnostic.c_str());
    return 2;
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  Config config = load_config(c);
  if (c.seed) config.set("train.seed", std::to_string(*c.seed));
  const auto e = experiment_from_config(config);
  const auto batches = e.sweep_batches.empty() ? std::vector<std::int64_t>{e.batch_size} : e.sweep_batches;
  const auto rules = e.sweep_rules.empty() ? std::vector<ScalingRule>{e.rule} : e.sweep_rules;
  const SweepResult result = sweep(e, batches, rules);
  std::printf("%s", result.table.c_str());
  write_reports(result.records, e.output_dir);
  return 0;
}

int cmd_grad_check(const Common& c, const std::string& model, std::int64_t trials, const GradCheckOptions& options) {
  const std::uint64_t seed = c.seed.value_or(0);
  std::vector<ModelKind> kinds;
  if (model == "all") {
    kinds = {ModelKind::kWideDeep, ModelKind::kDeepFM, ModelKind::kDCN, ModelKind::kDCNv2};
  } else {
    kinds = {parse_model_kind(model)};
  }
  bool ok = true;
  for (const auto kind : kinds) {
    const auto report = grad_check(kind, seed, trials, options);
    std::printf("%s: %lld trials, %lld redrawn near a kink, max rel error %s\n", to_string(kind).c_str(),
                static_cast<long long>(report.n_trials), static_cast<long long>(report.n_resampled),
                num(report.overall).c_str());
    for (const auto& [name, err] : report.max_rel_error) std::printf("  %-14s %s\n", name.c_str(), num(err).c_str());
    ok = ok && report.overall < 1e-5;
  }
  return ok ? 0 : 1;
}

int cmd_verify(const Common& c, const std::vector<std::string>& suites) {
  const auto report = verify(suites, c.seed.value_or(0));
  for (const auto& check : report.checks) {
    std::printf("%-4s %-17s %-40s %-14s %s\n", check.passed ? "PASS" : "FAIL", check.suite.c_str(),
                check.name.c_str(), num(check.value).c_str(), check.bound.c_str());
  }
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cowclip-lab: large-batch CTR training lab"};
  app.require_subcommand(1);

  Common common;
  std::string out_path = "dataset.txt";
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset container");
  add_common(gen, common);
  gen->add_option("--out", out_path, "output path");

  std::string data_path;
  std::vector<std::int64_t> freq_batches{256, 1024, 4096};
  std::int64_t top = 5;
  auto* freq = app.add_subcommand("analyze-freq", "id frequency statistics");
  add_common(freq, common);
  freq->add_option("--data", data_path, "dataset container (default: generate from config)");
  freq->add_option("--batch", freq_batches, "batch sizes for presence statistics");
  freq->add_option("--top", top, "most frequent ids to list per field");

  ScaleArgs scale_args;
  auto* scale_cmd = app.add_subcommand("scale", "scaled hyperparameters");
  add_common(scale_cmd, common);
  scale_cmd->add_option("--rule", scale_args.rule, "none|sqrt|sqrt_star|linear|n2_lambda|cowclip");
  scale_cmd->add_option("--base-batch", scale_args.base_batch);
  scale_cmd->add_option("--target-batch", scale_args.target_batch);
  scale_cmd->add_option("--eta", scale_args.eta, "base learning rate (dense, and embeddings unless --eta-embed)");
  scale_cmd->add_option("--eta-embed", scale_args.eta_embed);
  scale_cmd->add_option("--lambda", scale_args.lambda, "base L2 weight");
  scale_cmd->add_option("--clip-value", scale_args.clip_value);
  scale_cmd->add_option("--clip-scale", scale_args.clip_scale, "sqrt|linear");
  scale_cmd->add_option("--r", scale_args.r);
  scale_cmd->add_option("--zeta", scale_args.zeta);
  scale_cmd->add_option("--preset", scale_args.preset, "print a published schedule instead");

  auto* train_cmd = app.add_subcommand("train", "one training run");
  add_common(train_cmd, common);
  auto* sweep_cmd = app.add_subcommand("sweep", "batch sizes x rules");
  add_common(sweep_cmd, common);

  std::string model = "all";
  std::int64_t trials = 100;
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient check");
  add_common(grad_cmd, common);
  grad_cmd->add_option("--model", model, "wd|deepfm|dcn|dcnv2|all");
  grad_cmd->add_option("--trials", trials);
  GradCheckOptions grad_options;
  grad_cmd->add_option("--step", grad_options.rel_step, "relative finite-difference step");
  grad_cmd->add_option("--param-scale", grad_options.param_scale, "std of the random parameters");
  grad_cmd->add_flag("--zero-weights", grad_options.zero_weights, "draw every parameter as zero");

  std::vector<std::string> suites;
  auto* verify_cmd = app.add_subcommand("verify", "numerical property suites");
  add_common(verify_cmd, common);
  verify_cmd->add_option("suites", suites, "suite names (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(common, out_path);
    if (freq->parsed()) return cmd_analyze_freq(common, data_path, freq_batches, top);
    if (scale_cmd->parsed()) return cmd_scale(scale_args);
    if (train_cmd->parsed()) return cmd_train(common);
    if (sweep_cmd->parsed()) return cmd_sweep(common);
    if (grad_cmd->parsed()) return cmd_grad_check(common, model, trials, grad_options);
    if (verify_cmd->parsed()) return cmd_verify(common, suites);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  }
  return 0;
}
