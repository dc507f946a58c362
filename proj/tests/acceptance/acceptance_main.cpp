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


// Runs the ten acceptance criteria and prints one PASS/FAIL line per
// criterion. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cowclip/harness.hpp"

namespace {

using namespace cowclip;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1

Outcome gradient_correctness() {
  double worst = 0.0;
  std::string detail;
  for (const auto kind : {ModelKind::kWideDeep, ModelKind::kDeepFM, ModelKind::kDCN, ModelKind::kDCNv2}) {
    const GradCheckReport r = grad_check(kind, 2026, 100);
    worst = std::max(worst, r.overall);
    detail += to_string(kind) + "=" + num(r.overall) + " ";
  }
  return {worst < 1e-5, detail + "(bound 1e-5)"};
}

// ---------------------------------------------------------------------------
// 2

// Scalar Adam, independent of the library kernels.
struct RefAdam {
  double m = 0, v = 0, w;
  std::int64_t t = 0;
  explicit RefAdam(double w0) : w(w0) {}
  void step(double g, double lr, double l2) {
    ++t;
    const double gp = g + l2 * w;
    m = 0.9 * m + 0.1 * gp;
    v = 0.999 * v + 0.001 * gp * gp;
    const double mh = m / (1 - std::pow(0.9, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(0.999, static_cast<double>(t)));
    w -= lr * mh / (std::sqrt(vh) + 1e-12);
  }
};

Outcome loss_scaling_equivalence() {
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  for (const double c : {2.0, 10.0, 100.0}) {
    const double lib = verify_adam_scaling_equivalence(c, 1e-4, 17);
    RefAdam a(0.5), b(0.5);
    double ref = 0;
    for (int t = 0; t < 200; ++t) {
      const double g = mag(rng) * (rng() % 2 ? 1 : -1);
      a.step(c * g, 1e-3, 1e-4);
      b.step(g, 1e-3, 1e-4 / c);
      ref = std::max(ref, std::abs(a.w - b.w));
    }
    const double sgd = verify_sgd_scaling_equivalence(c, 1e-4, 18);
    ok = ok && lib < 1e-6 && ref < 1e-6 && sgd <= 1e-15;
    detail += "c=" + num(c) + ": adam " + num(lib) + " (ref " + num(ref) + ") sgd " + num(sgd) + "; ";
  }
  return {ok, detail + "bounds 1e-6 / 1e-15"};
}

// ---------------------------------------------------------------------------
// 3

Outcome cowclip_contract() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> expo(-6.0, 1.0);
  std::int64_t bound = 0, direction = 0, identity = 0, idem = 0, columns = 0;
  int triples = 0;
  while (triples < 10000) {
    // A few columns per call, each one triple.
    const int dim = 1 + static_cast<int>(rng() % 12);
    const int n = 1 + static_cast<int>(rng() % 4);
    const double r = std::pow(10.0, static_cast<double>(rng() % 3) - 1.0);
    const double zeta = std::pow(10.0, -3.0 - static_cast<double>(rng() % 3));
    EmbeddingTable table({n}, dim);
    SparseGradient grad;
    grad.dim = dim;
    grad.fields.resize(1);
    auto& fg = grad.fields[0];
    fg.grads = RowMatrix(n, dim);
    for (int k = 0; k < n; ++k) {
      const double ws = std::pow(10.0, expo(rng)), gs = std::pow(10.0, expo(rng));
      for (int d = 0; d < dim; ++d) {
        table.field(0)(k, d) = ws * normal(rng);
        fg.grads(k, d) = gs * normal(rng);
      }
      fg.ids.push_back(k);
      fg.counts.push_back(1 + static_cast<std::int32_t>(rng() % 32));
    }
    const SparseGradient out = cowclip::cowclip(table, grad, r, zeta);
    for (int k = 0; k < n; ++k) {
      double w2 = 0, g2 = 0, c2 = 0, dot = 0;
      for (int d = 0; d < dim; ++d) {
        const double w = table.field(0)(k, d), g = fg.grads(k, d), h = out.fields[0].grads(k, d);
        w2 += w * w;
        g2 += g * g;
        c2 += h * h;
        dot += g * h;
      }
      const double t = fg.counts[k] * std::max(r * std::sqrt(w2), zeta);
      if (std::sqrt(c2) > t + 1e-12) ++bound;
      if (g2 > 0 && std::abs(dot / std::sqrt(g2 * c2) - 1.0) > 1e-12) ++direction;
      if (std::sqrt(g2) <= t) {
        for (int d = 0; d < dim; ++d) {
          if (out.fields[0].grads(k, d) != fg.grads(k, d)) {
            ++identity;
            break;
          }
        }
      }
      ++columns;
      ++triples;
    }
    if (!(cowclip::cowclip(table, out, r, zeta) == out)) ++idem;
  }
  const std::int64_t bad = bound + direction + identity + idem;
  return {bad == 0, std::to_string(columns) + " columns; violations: bound " + std::to_string(bound) + ", direction " +
                        std::to_string(direction) + ", identity " + std::to_string(identity) + ", idempotence " +
                        std::to_string(idem)};
}

// ---------------------------------------------------------------------------
// 4

Outcome auc_oracle() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  int mismatches = 0;
  double worst = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 2 + static_cast<int>(rng() % 999);
    std::vector<double> s(n), y(n);
    const int levels = inst % 3 == 0 ? 2 + static_cast<int>(rng() % 8) : 0;  // tie-heavy every third
    for (int i = 0; i < n; ++i) {
      s[i] = levels ? static_cast<double>(rng() % static_cast<unsigned>(levels)) : normal(rng);
      y[i] = static_cast<double>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    std::int64_t twice = 0, pairs = 0;
    for (int i = 0; i < n; ++i) {
      if (y[i] != 1) continue;
      for (int j = 0; j < n; ++j) {
        if (y[j] != 0) continue;
        ++pairs;
        twice += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
      }
    }
    const double oracle = static_cast<double>(twice) / static_cast<double>(2 * pairs);
    const double got = auc(s, y);
    worst = std::max(worst, std::abs(got - oracle));
    mismatches += got != oracle;
  }
  return {mismatches == 0, "100 instances, mismatches " + std::to_string(mismatches) + ", max |diff| " + num(worst)};
}

// ---------------------------------------------------------------------------
// 5

Outcome presence_probability() {
  bool ok = true;
  std::string detail;
  constexpr std::size_t kRows = 10000;
  std::uint64_t seed = 500;
  for (const double p : {1e-4, 1e-2, 0.5}) {
    Dataset ds({FieldSchema{FieldKind::kCategorical, 2, "f"}});
    const auto marked = static_cast<std::size_t>(std::llround(p * kRows));
    for (std::size_t i = 0; i < kRows; ++i) ds.append(Sample{0, {}, {i < marked ? 1 : 0}});
    const double p_data = static_cast<double>(marked) / kRows;
    for (const std::size_t b : {64, 4096}) {
      const std::int64_t n = b == 64 ? 20000 : 4000;
      auto it = make_batches(ds, b, BatchMode::kWithReplacement, seed++);
      std::int64_t hits = 0;
      for (std::int64_t t = 0; t < n; ++t) {
        const auto batch = it.next();
        hits += std::any_of(batch->rows.begin(), batch->rows.end(), [&](std::size_t r) { return ds.ids(r)[0] == 1; });
      }
      const double exact = 1.0 - std::pow(1.0 - p_data, static_cast<double>(b));
      const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(n));
      const double emp = static_cast<double>(hits) / static_cast<double>(n);
      const double lib = batch_presence_probability(p_data, static_cast<std::int64_t>(b), PresenceMode::kExact);
      // p = 0.5 at b = 4096 gives exact = 1 and se = 0: the empirical rate must be exactly 1.
      const bool pass = std::abs(emp - exact) <= 3 * se && std::abs(lib - exact) <= 1e-12 * exact;
      ok = ok && pass;
      detail += "p=" + num(p) + ",b=" + std::to_string(b) + ":" + num(std::abs(emp - exact) / std::max(se, 1e-300)) + "se ";
    }
  }
  double worst = 0;
  for (int i = 0; i <= 60; ++i) {
    const double p = std::pow(10.0, -6.0 + i * 0.1);
    for (std::int64_t b = 1; b <= 131072; b *= 2) {
      if (static_cast<double>(b) * p > 0.1) continue;
      const double exact = 1.0 - std::pow(1.0 - p, static_cast<double>(b));
      worst = std::max(worst, std::abs(batch_presence_probability(p, b, PresenceMode::kApprox) - exact) / exact);
    }
  }
  ok = ok && worst < 0.06;
  return {ok, detail + "| approx max rel err " + num(worst) + " (bound 0.06)"};
}

// ---------------------------------------------------------------------------
// 6

struct Cell {
  const char* preset;
  std::int64_t batch;
  double eta_embed, l2, eta_dense;
  double r, zeta;
};

Outcome scaling_tables() {
  const double s2 = std::sqrt(2.0);
  // Printed values, transcribed cell by cell. Sqrt/linear/empirical share base 1e-4 at 1K.
  const std::vector<Cell> cells{
      {"sqrt_1k", 1024, 1e-4, 1e-4, 1e-4, 1, 1e-4},
      {"sqrt_1k", 2048, s2 * 1e-4, s2 * 1e-4, s2 * 1e-4, 1, 1e-4},
      {"sqrt_1k", 4096, 2e-4, 2e-4, 2e-4, 1, 1e-4},
      {"sqrt_1k", 8192, 2 * s2 * 1e-4, 2 * s2 * 1e-4, 2 * s2 * 1e-4, 1, 1e-4},
      {"linear_1k", 1024, 1e-4, 1e-4, 1e-4, 1, 1e-4},
      {"linear_1k", 2048, 2e-4, 1e-4, 2e-4, 1, 1e-4},
      {"linear_1k", 4096, 4e-4, 1e-4, 4e-4, 1, 1e-4},
      {"linear_1k", 8192, 8e-4, 1e-4, 8e-4, 1, 1e-4},
      {"empirical_1k", 1024, 1e-4, 1e-4, 1e-4, 1, 1e-4},
      {"empirical_1k", 2048, 1e-4, 4e-4, 2e-4, 1, 1e-4},
      {"empirical_1k", 4096, 1e-4, 1.6e-3, 4e-4, 1, 1e-4},
      {"empirical_1k", 8192, 1e-4, 1.28e-2, 8e-4, 1, 1e-4},  // L2 underlined
      {"cowclip_criteo", 1024, 1e-4, 1e-4, 8e-4, 1, 1e-5},
      {"cowclip_criteo", 2048, 1e-4, 2e-4, 8 * s2 * 1e-2, 1, 1e-5},  // dense printed 8*sqrt(2)e-2
      {"cowclip_criteo", 4096, 1e-4, 4e-3, 16e-4, 1, 1e-5},          // L2 printed 4e-3
      {"cowclip_criteo", 8192, 1e-4, 8e-4, 16 * s2 * 1e-4, 1, 1e-5},
      {"cowclip_criteo", 16384, 1e-4, 1.6e-3, 32e-4, 1, 1e-5},
      {"cowclip_criteo", 32768, 1e-4, 3.2e-3, 32 * s2 * 1e-4, 1, 1e-5},
      {"cowclip_criteo", 65536, 1e-4, 6.4e-3, 64e-4, 1, 1e-5},
      {"cowclip_criteo", 131072, 1e-4, 1.28e-2, 64 * s2 * 1e-4, 1, 1e-5},
      {"cowclip_avazu", 1024, 1e-4, 1e-4, 1e-4, 10, 1e-3},
      {"cowclip_avazu", 2048, 1e-4, 2e-4, s2 * 1e-4, 10, 1e-3},
      {"cowclip_avazu", 4096, 1e-4, 4e-3, 2e-4, 1, 1e-4},  // L2 printed 4e-3
      {"cowclip_avazu", 8192, 1e-4, 8e-4, 2 * s2 * 1e-4, 1, 1e-4},
      {"cowclip_avazu", 16384, 1e-4, 1.6e-3, 4e-4, 1, 1e-4},
      {"cowclip_avazu", 32768, 1e-4, 3.2e-3, 4 * s2 * 1e-4, 1, 1e-4},
      {"cowclip_avazu", 65536, 1e-4, 6.4e-3, 8e-4, 1, 1e-4},
      {"cowclip_avazu", 131072, 1e-4, 9.6e-3, 16e-4, 1, 1e-4},  // L2 and dense underlined
  };
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::abs(b); };
  int rule_cells = 0, preset_cells = 0, corrected = 0, failures = 0;
  std::string notes;
  for (const auto& cell : cells) {
    const PresetSchedule& preset = preset_schedule(cell.preset);
    const auto row = std::find_if(preset.rows.begin(), preset.rows.end(),
                                  [&](const PresetRow& r) { return r.batch == cell.batch; });
    if (row == preset.rows.end()) {
      ++failures;
      continue;
    }
    const ScalingPlan plan = scale_to_batch(preset.rule, preset.base, cell.batch);
    auto check = [&](double printed, double rule_value, double preset_value, bool tuned, bool fixed,
                     const char* what) {
      if (tuned) {
        ++preset_cells;
        if (!same(preset_value, printed)) ++failures;
      } else if (fixed) {
        // Printed value breaks its column's own progression; the rule value is
        // compared instead and the cell is listed.
        ++corrected;
        notes += std::string(notes.empty() ? "" : "; ") + cell.preset + "@" + std::to_string(cell.batch) + " " +
                 what + " printed " + num(printed) + " -> " + num(rule_value);
        if (!same(preset_value, rule_value)) ++failures;
      } else {
        ++rule_cells;
        if (!same(rule_value, printed)) ++failures;
      }
    };
    check(cell.eta_embed, plan.eta_embed, row->eta_embed, false, false, "eta_embed");
    check(cell.l2, plan.l2, row->l2, row->l2_tuned, row->l2_corrected, "l2");
    check(cell.eta_dense, plan.eta_dense, row->eta_dense, row->eta_dense_tuned, row->eta_dense_corrected,
          "eta_dense");
    // (r, zeta) is a per-size tuning choice carried by the preset rows.
    ++preset_cells;
    if (row->r != cell.r || row->zeta != cell.zeta) ++failures;
  }
  return {failures == 0, std::to_string(rule_cells) + " cells by rule, " + std::to_string(preset_cells) +
                             " by preset, " + std::to_string(corrected) + " corrected [" + notes +
                             "], failures " + std::to_string(failures)};
}

// ---------------------------------------------------------------------------
// 7, 8

Outcome covariance_ratio() {
  QuadraticProblem q;
  q.dim = 5;
  const double a = estimate_update_covariance(q, 64, 0.1, 20000, 701).trace();
  const double b = estimate_update_covariance(q, 256, 0.2, 20000, 702).trace();
  return {b / a >= 0.9 && b / a <= 1.1, "trace ratio " + num(b / a) + " (bound [0.9, 1.1], 2e4 trials)"};
}

Outcome update_frequency() {
  const auto fixed = expected_update_frequency_check(1e-4, 64, 16, 1e-3, 1e-3, 200000, 801);
  const auto naive = expected_update_frequency_check(1e-4, 64, 16, 1e-3, 16e-3, 200000, 802);
  const bool ok = fixed.ratio() >= 0.9 && fixed.ratio() <= 1.1 && naive.ratio() >= 16 * 0.85 &&
                  naive.ratio() <= 16 * 1.15;
  return {ok, "fixed lr " + num(fixed.ratio()) + " (bound [0.9, 1.1]); linear lr " + num(naive.ratio()) +
                  " (bound [13.6, 18.4]); 2e5 trials"};
}

// ---------------------------------------------------------------------------
// 9

ExperimentConfig desk_config() {
  ExperimentConfig c;  // default synthetic data: N = 200k, 6 Zipf fields of 10k ids, 2 dense
  c.model.hidden = {64, 64};
  c.base.base_batch = 256;
  c.base.eta_dense = 1e-3;
  c.base.eta_embed = 1e-3;
  c.batch_size = 256;
  c.epochs = 2;
  return c;
}

double mean_auc(const ExperimentConfig& base, const Splits& splits, ScalingRule rule, std::int64_t b) {
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ExperimentConfig c = base;
    c.rule = rule;
    c.batch_size = b;
    c.seed = seed;
    const RunRecord r = train(c, splits);
    sum += r.diverged ? 0.5 : r.final_epoch().test_auc;
  }
  return sum / 3;
}

Outcome desk_ordering() {
  const ExperimentConfig cfg = desk_config();
  const Splits main = prepare_data(cfg.data);
  const double base = mean_auc(cfg, main, ScalingRule::kNone, 256);
  const double cow = mean_auc(cfg, main, ScalingRule::kCowClip, 4096);
  const double none = mean_auc(cfg, main, ScalingRule::kNone, 4096);

  ExperimentConfig collapsed = cfg;
  collapsed.data.top_k = 3;
  const Splits top = prepare_data(collapsed.data);
  const double tbase = mean_auc(collapsed, top, ScalingRule::kNone, 256);
  const double tsqrt = mean_auc(collapsed, top, ScalingRule::kSqrt, 4096);
  const double tlin = mean_auc(collapsed, top, ScalingRule::kLinear, 4096);

  const bool ok = std::abs(cow - base) <= 0.005 && (base - none) > (base - cow) &&
                  std::abs(tsqrt - tbase) <= 0.005 && std::abs(tlin - tbase) <= 0.005;
  return {ok, "zipf: base@256 " + num(base) + ", cowclip@4096 " + num(cow) + ", none@4096 " + num(none) +
                  " | top-3: base@256 " + num(tbase) + ", sqrt@4096 " + num(tsqrt) + ", linear@4096 " + num(tlin)};
}

// ---------------------------------------------------------------------------
// 10

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(COWCLIP_CLI_PATH) + " " + args + " 2>&1";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return "<popen failed>";
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return out + "\n<status " + std::to_string(status) + ">";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  std::vector<std::string> failed;
  ExperimentConfig c;
  c.data.n_samples = 5000;
  c.model.hidden = {16, 16};
  c.base.base_batch = 128;
  c.batch_size = 512;
  c.rule = ScalingRule::kCowClip;
  c.epochs = 2;
  c.seed = 5;
  if (!train(c).same_numbers(train(c))) failed.push_back("train");
  const auto g1 = grad_check(ModelKind::kDCNv2, 3, 10), g2 = grad_check(ModelKind::kDCNv2, 3, 10);
  if (g1.max_rel_error != g2.max_rel_error || g1.n_resampled != g2.n_resampled) failed.push_back("grad_check");
  const auto v1 = verify({}, 9), v2 = verify({}, 9);
  bool same_verify = v1.checks.size() == v2.checks.size();
  for (std::size_t i = 0; same_verify && i < v1.checks.size(); ++i) {
    same_verify = v1.checks[i].value == v2.checks[i].value && v1.checks[i].passed == v2.checks[i].passed;
  }
  if (!same_verify) failed.push_back("verify");
  SyntheticSpec spec;
  if (!(generate_synthetic(spec, 3000, 4) == generate_synthetic(spec, 3000, 4))) failed.push_back("generate");

  // Command line: stdout of pure commands, written files of the rest.
  for (const std::string args :
       {"scale --rule cowclip --base-batch 1024 --target-batch 65536 --eta 8e-4 --eta-embed 1e-4 --lambda 1e-4",
        "verify --seed 4", "grad-check --model all --trials 5 --seed 8"}) {
    if (run_cli(args) != run_cli(args)) failed.push_back("cli " + args.substr(0, args.find(' ')));
  }
  const auto dir = std::filesystem::temp_directory_path() / "cowclip_acceptance_det";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string data_args = " --seed 12 --set data.n_samples=3000";
  run_cli("gen-data --out " + (dir / "a.data").string() + data_args);
  run_cli("gen-data --out " + (dir / "b.data").string() + data_args);
  if (slurp(dir / "a.data").empty() || slurp(dir / "a.data") != slurp(dir / "b.data")) failed.push_back("cli gen-data");
  const std::string train_args = " --seed 3 --set data.n_samples=4000 --set model.hidden=8 --set train.epochs=2"
                                 " --set scale.base_batch=128 --set train.batch_size=256 --set scale.rule=cowclip";
  run_cli("train" + train_args + " --set output.dir=" + (dir / "t1").string());
  run_cli("train" + train_args + " --set output.dir=" + (dir / "t2").string());
  auto r1 = records_from_json(slurp(dir / "t1" / "runs.json"));
  auto r2 = records_from_json(slurp(dir / "t2" / "runs.json"));
  // The two runs differ only in where they write.
  for (auto* rs : {&r1, &r2}) {
    for (auto& r : *rs) r.config.erase("output.dir");
  }
  if (r1.size() != 1 || r2.size() != 1 || !r1[0].same_numbers(r2[0])) failed.push_back("cli train");
  std::filesystem::remove_all(dir);

  std::string detail = "train, grad_check, verify, generate_synthetic, cli scale/verify/grad-check/gen-data/train";
  if (!failed.empty()) {
    detail = "differences in:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 120, gradient_correctness},
      {2, "loss-scaling equivalence", 10, loss_scaling_equivalence},
      {3, "cowclip contract", 5, cowclip_contract},
      {4, "auc oracle", 30, auc_oracle},
      {5, "batch presence probability", 60, presence_probability},
      {6, "scaling tables", 1, scaling_tables},
      {7, "update covariance", 60, covariance_ratio},
      {8, "rare-id update expectation", 120, update_frequency},
      {9, "desk-scale ordering", 1200, desk_ordering},
      {10, "determinism", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_seconds <= 0 || secs < c.budget_seconds;
    const bool pass = o.passed && in_time;
    failures += !pass;
    std::printf("%s  %2d %-28s %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_seconds > 0 ? (" of " + num(c.budget_seconds) + "s").c_str() : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
