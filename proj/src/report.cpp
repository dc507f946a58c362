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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cowclip/errors.hpp"
#include "cowclip/harness.hpp"
#include "json.hpp"

namespace cowclip {

using nlohmann::json;

namespace {

// JSON has no NaN; it travels as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json epoch_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"train_loss", number(e.train_loss)},
          {"test_auc", number(e.test_auc)},
          {"test_logloss", number(e.test_logloss)},
          {"seconds", e.seconds},
          {"steps", e.steps}};
}

EpochRecord epoch_from(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<std::int64_t>();
  e.train_loss = read_number(j.at("train_loss"));
  e.test_auc = read_number(j.at("test_auc"));
  e.test_logloss = read_number(j.at("test_logloss"));
  e.seconds = j.at("seconds").get<double>();
  e.steps = j.at("steps").get<std::int64_t>();
  return e;
}

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "table" || name == "text-table") return ReportFormat::kTextTable;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string out = "run_id,model,rule,batch_size,epoch,train_loss,test_auc,test_logloss,seconds\n";
  for (const auto& r : records) {
    for (const auto& e : r.epochs) {
      out += r.run_id + "," + r.model + "," + r.rule + "," + std::to_string(r.batch_size) + "," +
             std::to_string(e.epoch) + "," + cell(e.train_loss) + "," + cell(e.test_auc) + "," +
             cell(e.test_logloss) + "," + cell(e.seconds) + "\n";
    }
  }
  return out;
}

std::string records_to_json(const std::vector<RunRecord>& records) {
  json runs = json::array();
  for (const auto& r : records) {
    json epochs = json::array();
    for (const auto& e : r.epochs) epochs.push_back(epoch_json(e));
    runs.push_back({{"run_id", r.run_id},
                    {"model", r.model},
                    {"rule", r.rule},
                    {"batch_size", r.batch_size},
                    {"seed", r.seed},
                    {"eta_dense", r.eta_dense},
                    {"eta_embed", r.eta_embed},
                    {"l2", r.l2},
                    {"clip_value", r.clip_value},
                    {"initial", epoch_json(r.initial)},
                    {"epochs", epochs},
                    {"diverged", r.diverged},
                    {"diagnostic", r.diagnostic},
                    {"config", r.config}});
  }
  return json{{"runs", runs}}.dump(2) + "\n";
}

std::vector<RunRecord> records_from_json(const std::string& text) {
  const json doc = json::parse(text);
  std::vector<RunRecord> out;
  for (const auto& j : doc.at("runs")) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.rule = j.at("rule").get<std::string>();
    r.batch_size = j.at("batch_size").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.eta_dense = j.at("eta_dense").get<double>();
    r.eta_embed = j.at("eta_embed").get<double>();
    r.l2 = j.at("l2").get<double>();
    r.clip_value = j.at("clip_value").get<double>();
    r.initial = epoch_from(j.at("initial"));
    for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from(e));
    r.diverged = j.at("diverged").get<bool>();
    r.diagnostic = j.at("diagnostic").get<std::string>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

std::string records_to_table(const std::vector<RunRecord>& records) {
  std::vector<std::string> rules;
  std::set<std::int64_t> sizes;
  for (const auto& r : records) {
    if (std::find(rules.begin(), rules.end(), r.rule) == rules.end()) rules.push_back(r.rule);
    sizes.insert(r.batch_size);
  }
  auto entry = [&](const std::string& rule, std::int64_t b) -> const RunRecord* {
    const RunRecord* found = nullptr;
    for (const auto& r : records) {
      if (r.rule == rule && r.batch_size == b) found = &r;
    }
    return found;
  };

  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s", "rule");
  out << buf;
  for (const auto b : sizes) {
    std::snprintf(buf, sizeof(buf), " | %-17s", ("b=" + std::to_string(b)).c_str());
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof(buf), "%-10s", "");
  out << buf;
  for (std::size_t i = 0; i < sizes.size(); ++i) out << " | AUC(%)   LogLoss ";
  out << "\n";
  out << std::string(10 + 20 * sizes.size(), '-') << "\n";
  for (const auto& rule : rules) {
    std::snprintf(buf, sizeof(buf), "%-10s", rule.c_str());
    out << buf;
    for (const auto b : sizes) {
      const RunRecord* r = entry(rule, b);
      if (r == nullptr) {
        std::snprintf(buf, sizeof(buf), " | %-17s", "-");
      } else if (r->diverged) {
        std::snprintf(buf, sizeof(buf), " | %-17s", "diverge");
      } else {
        const auto& e = r->final_epoch();
        std::snprintf(buf, sizeof(buf), " | %6.2f   %7.4f ", 100.0 * e.test_auc, e.test_logloss);
      }
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::filesystem::path emit_report(const std::vector<RunRecord>& records, ReportFormat format,
                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::filesystem::path path = dir;
  std::string body;
  switch (format) {
    case ReportFormat::kCsv:
      path /= "runs.csv";
      body = records_to_csv(records);
      break;
    case ReportFormat::kJson:
      path /= "runs.json";
      body = records_to_json(records);
      break;
    case ReportFormat::kTextTable:
      path /= "runs.txt";
      body = records_to_table(records);
      break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return path;
}

}  // namespace cowclip
