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

#include "cowclip/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "cowclip/errors.hpp"

namespace cowclip {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

int parse_label(std::string_view text, std::size_t row) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  throw ParseError(row, "label must be 0 or 1, got '" + std::string(text) + "'");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

// ---------------------------------------------------------------------------
// Schema and dataset

void validate_schema(std::span<const FieldSchema> schema, bool allow_empty_vocab) {
  std::set<std::string> names;
  for (const auto& field : schema) {
    if (!names.insert(field.name).second) {
      throw std::invalid_argument("duplicate field name '" + field.name + "'");
    }
    if (field.kind == FieldKind::kCategorical) {
      if (field.vocab_size < 0 || (field.vocab_size == 0 && !allow_empty_vocab)) {
        throw std::invalid_argument("categorical field '" + field.name + "' needs vocab_size >= 1");
      }
    }
  }
}

Dataset::Dataset(std::vector<FieldSchema> schema, bool allow_empty_vocab)
    : schema_(std::move(schema)) {
  validate_schema(schema_, allow_empty_vocab);
  bool seen_categorical = false;
  for (const auto& field : schema_) {
    if (field.kind == FieldKind::kDense) {
      if (seen_categorical) {
        throw std::invalid_argument("dense fields must precede categorical fields");
      }
      ++n_dense_;
    } else {
      seen_categorical = true;
      ++n_categorical_;
    }
  }
}

void Dataset::append(const Sample& sample) {
  if (sample.label != 0 && sample.label != 1) {
    throw std::invalid_argument("label must be 0 or 1");
  }
  if (sample.dense.size() != n_dense_ || sample.ids.size() != n_categorical_) {
    throw std::invalid_argument("sample arity does not match schema");
  }
  for (std::size_t j = 0; j < n_categorical_; ++j) {
    if (sample.ids[j] < 0 || sample.ids[j] >= vocab_size(j)) {
      throw std::out_of_range("id " + std::to_string(sample.ids[j]) + " outside vocab of field '" +
                              schema_[n_dense_ + j].name + "'");
    }
  }
  labels_.push_back(static_cast<std::uint8_t>(sample.label));
  dense_.insert(dense_.end(), sample.dense.begin(), sample.dense.end());
  ids_.insert(ids_.end(), sample.ids.begin(), sample.ids.end());
}

void Dataset::reserve(std::size_t n) {
  labels_.reserve(n);
  dense_.reserve(n * n_dense_);
  ids_.reserve(n * n_categorical_);
}

std::vector<std::int64_t> Dataset::vocab_sizes() const {
  std::vector<std::int64_t> out(n_categorical_);
  for (std::size_t j = 0; j < n_categorical_; ++j) out[j] = vocab_size(j);
  return out;
}

Sample Dataset::sample(std::size_t i) const {
  Sample s;
  s.label = labels_[i];
  const auto d = dense(i);
  const auto c = ids(i);
  s.dense.assign(d.begin(), d.end());
  s.ids.assign(c.begin(), c.end());
  return s;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.schema_ = schema_;
  out.n_dense_ = n_dense_;
  out.n_categorical_ = n_categorical_;
  out.seed_ = seed_;
  out.reserve(rows.size());
  for (const std::size_t r : rows) {
    out.labels_.push_back(labels_.at(r));
    const auto d = dense(r);
    const auto c = ids(r);
    out.dense_.insert(out.dense_.end(), d.begin(), d.end());
    out.ids_.insert(out.ids_.end(), c.begin(), c.end());
  }
  return out;
}

void Dataset::set_vocab_size(std::size_t j, std::int64_t vocab) {
  schema_.at(n_dense_ + j).vocab_size = vocab;
}

// ---------------------------------------------------------------------------
// TSV ingestion

Dataset load_ctr_tsv(std::istream& in, const TsvLayout& layout, std::optional<std::size_t> max_rows) {
  std::vector<FieldSchema> schema;
  for (std::size_t i = 0; i < layout.n_dense; ++i) {
    schema.push_back({FieldKind::kDense, 0, "I" + std::to_string(i + 1)});
  }
  for (std::size_t j = 0; j < layout.n_categorical; ++j) {
    schema.push_back({FieldKind::kCategorical, 0, "C" + std::to_string(j + 1)});
  }
  // Vocabularies grow while reading; ids are validated against the final
  // sizes once every row has been seen.
  std::vector<std::unordered_map<std::string, std::int32_t>> vocab(layout.n_categorical);
  std::vector<Sample> rows;

  const std::size_t n_columns = 1 + layout.n_dense + layout.n_categorical;
  std::string line;
  std::size_t row = 0;
  while ((!max_rows || rows.size() < *max_rows) && std::getline(in, line)) {
    ++row;
    const auto cells = split_tabs(chomp(line));
    if (cells.size() != n_columns) {
      throw ParseError(row, "expected " + std::to_string(n_columns) + " columns, got " +
                                std::to_string(cells.size()));
    }
    Sample s;
    s.label = parse_label(cells[0], row);
    s.dense.resize(layout.n_dense);
    for (std::size_t i = 0; i < layout.n_dense; ++i) {
      const auto cell = cells[1 + i];
      double v = 0.0;
      if (!cell.empty() && !parse_double(cell, v)) {
        throw ParseError(row, "dense field I" + std::to_string(i + 1) + " is not numeric");
      }
      if (layout.transform == DenseTransform::kLog1p) v = std::log1p(std::max(v, 0.0));
      s.dense[i] = v;
    }
    s.ids.resize(layout.n_categorical);
    for (std::size_t j = 0; j < layout.n_categorical; ++j) {
      auto& map = vocab[j];
      const auto [it, inserted] = map.try_emplace(std::string(cells[1 + layout.n_dense + j]),
                                                  static_cast<std::int32_t>(map.size()));
      s.ids[j] = it->second;
    }
    rows.push_back(std::move(s));
  }

  for (std::size_t j = 0; j < layout.n_categorical; ++j) {
    schema[layout.n_dense + j].vocab_size = static_cast<std::int64_t>(vocab[j].size());
  }
  Dataset dataset(std::move(schema), /*allow_empty_vocab=*/true);
  dataset.reserve(rows.size());
  for (const auto& s : rows) dataset.append(s);
  return dataset;
}

Dataset load_ctr_tsv(const std::filesystem::path& path, const TsvLayout& layout,
                     std::optional<std::size_t> max_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return load_ctr_tsv(in, layout, max_rows);
}

Dataset load_criteo_tsv(const std::filesystem::path& path, std::optional<std::size_t> max_rows) {
  return load_ctr_tsv(path, TsvLayout{}, max_rows);
}

// ---------------------------------------------------------------------------
// Container format

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << "cowclip-dataset v1\n";
  out << "seed ";
  if (dataset.seed()) {
    out << *dataset.seed();
  } else {
    out << "none";
  }
  out << "\nfields " << dataset.schema().size() << "\n";
  for (const auto& f : dataset.schema()) {
    out << (f.kind == FieldKind::kDense ? "dense" : "categorical") << '\t' << f.vocab_size << '\t'
        << f.name << '\n';
  }
  out << "rows " << dataset.size() << "\n";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.label(i);
    for (const double v : dataset.dense(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << '\t' << buf;
    }
    for (const auto id : dataset.ids(i)) out << '\t' << id;
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset(out, dataset);
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  auto next_line = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw ParseError(row + 1, "unexpected end of container");
    ++row;
    return chomp(line);
  };
  if (next_line() != "cowclip-dataset v1") throw ParseError(row, "bad container magic");

  std::optional<std::uint64_t> seed;
  {
    const auto text = next_line();
    if (!text.starts_with("seed ")) throw ParseError(row, "expected seed line");
    const auto value = text.substr(5);
    if (value != "none") {
      std::uint64_t s = 0;
      if (!parse_int(value, s)) throw ParseError(row, "bad seed");
      seed = s;
    }
  }
  std::size_t n_fields = 0;
  {
    const auto text = next_line();
    if (!text.starts_with("fields ") || !parse_int(text.substr(7), n_fields)) {
      throw ParseError(row, "expected fields line");
    }
  }
  std::vector<FieldSchema> schema;
  for (std::size_t f = 0; f < n_fields; ++f) {
    const auto cells = split_tabs(next_line());
    if (cells.size() != 3) throw ParseError(row, "bad field line");
    FieldSchema field;
    if (cells[0] == "dense") {
      field.kind = FieldKind::kDense;
    } else if (cells[0] == "categorical") {
      field.kind = FieldKind::kCategorical;
    } else {
      throw ParseError(row, "unknown field kind");
    }
    if (!parse_int(cells[1], field.vocab_size)) throw ParseError(row, "bad vocab size");
    field.name = std::string(cells[2]);
    schema.push_back(std::move(field));
  }
  std::size_t n_rows = 0;
  {
    const auto text = next_line();
    if (!text.starts_with("rows ") || !parse_int(text.substr(5), n_rows)) {
      throw ParseError(row, "expected rows line");
    }
  }
  Dataset dataset(std::move(schema), /*allow_empty_vocab=*/true);
  dataset.set_seed(seed);
  dataset.reserve(n_rows);
  Sample s;
  s.dense.resize(dataset.n_dense());
  s.ids.resize(dataset.n_categorical());
  for (std::size_t i = 0; i < n_rows; ++i) {
    const auto cells = split_tabs(next_line());
    if (cells.size() != 1 + dataset.n_dense() + dataset.n_categorical()) {
      throw ParseError(row, "wrong column count");
    }
    s.label = parse_label(cells[0], row);
    for (std::size_t d = 0; d < dataset.n_dense(); ++d) {
      if (!parse_double(cells[1 + d], s.dense[d])) throw ParseError(row, "bad dense value");
    }
    for (std::size_t j = 0; j < dataset.n_categorical(); ++j) {
      if (!parse_int(cells[1 + dataset.n_dense() + j], s.ids[j])) throw ParseError(row, "bad id");
    }
    try {
      dataset.append(s);
    } catch (const std::exception& e) {
      throw ParseError(row, e.what());
    }
  }
  return dataset;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in);
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<double> zipf_pmf(std::int64_t vocab, double exponent) {
  std::vector<double> pmf(static_cast<std::size_t>(vocab));
  double total = 0.0;
  for (std::int64_t k = 0; k < vocab; ++k) {
    pmf[k] = std::pow(static_cast<double>(k + 1), -exponent);
    total += pmf[k];
  }
  for (auto& p : pmf) p /= total;
  return pmf;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t n_samples, std::uint64_t seed) {
  if (!spec.uniform && !(spec.zipf_exponent > 0.0)) {
    throw std::invalid_argument("zipf_exponent must be > 0");
  }
  const std::size_t n_cat = spec.n_categorical;
  std::vector<std::int64_t> vocab(n_cat);
  for (std::size_t j = 0; j < n_cat; ++j) {
    if (spec.vocab_sizes.empty()) throw std::invalid_argument("vocab_sizes must not be empty");
    vocab[j] = spec.vocab_sizes.size() == 1 ? spec.vocab_sizes[0] : spec.vocab_sizes.at(j);
    if (vocab[j] < 1) throw std::invalid_argument("vocab sizes must be >= 1");
  }
  if (spec.vocab_sizes.size() != 1 && spec.vocab_sizes.size() != n_cat) {
    throw std::invalid_argument("vocab_sizes must have one entry or one per categorical field");
  }

  std::vector<FieldSchema> schema;
  for (std::size_t i = 0; i < spec.n_dense; ++i) {
    schema.push_back({FieldKind::kDense, 0, "dense" + std::to_string(i)});
  }
  for (std::size_t j = 0; j < n_cat; ++j) {
    schema.push_back({FieldKind::kCategorical, vocab[j], "cat" + std::to_string(j)});
  }
  Dataset dataset(std::move(schema));
  dataset.set_seed(seed);
  dataset.reserve(n_samples);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Ground truth drawn before any sample so it depends on the seed alone.
  const auto& cm = spec.click_model;
  std::vector<std::vector<double>> truth(n_cat);
  std::vector<std::vector<double>> factor(n_cat);
  std::vector<std::vector<double>> cdf(n_cat);
  for (std::size_t j = 0; j < n_cat; ++j) {
    const double scale = cm.field_scales.empty() ? 1.0 : cm.field_scales.at(j);
    truth[j].resize(vocab[j]);
    factor[j].resize(vocab[j]);
    for (auto& w : truth[j]) w = scale * normal(rng);
    for (auto& u : factor[j]) u = normal(rng);
    std::vector<double> pmf = spec.uniform ? std::vector<double>(vocab[j], 1.0 / vocab[j])
                                           : zipf_pmf(vocab[j], spec.zipf_exponent);
    cdf[j].resize(vocab[j]);
    std::partial_sum(pmf.begin(), pmf.end(), cdf[j].begin());
    cdf[j].back() = 1.0;
  }

  Sample s;
  s.dense.resize(spec.n_dense);
  s.ids.resize(n_cat);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double score = cm.bias;
    for (std::size_t j = 0; j < n_cat; ++j) {
      const double u = unit(rng);
      const auto it = std::upper_bound(cdf[j].begin(), cdf[j].end(), u);
      const auto id = std::min<std::int64_t>(it - cdf[j].begin(), vocab[j] - 1);
      s.ids[j] = static_cast<std::int32_t>(id);
      score += truth[j][id];
    }
    if (cm.interaction != 0.0) {
      for (std::size_t j = 0; j + 1 < n_cat; ++j) {
        score += cm.interaction * factor[j][s.ids[j]] * factor[j + 1][s.ids[j + 1]];
      }
    }
    for (std::size_t d = 0; d < spec.n_dense; ++d) {
      s.dense[d] = normal(rng);
      const double w = cm.dense_weights.empty() ? 0.5 : cm.dense_weights.at(d);
      score += w * s.dense[d];
    }
    s.label = unit(rng) < sigmoid(score) ? 1 : 0;
    dataset.append(s);
  }
  return dataset;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * dataset.size()));
  const std::size_t n_train = dataset.size() - n_test;
  std::span<const std::size_t> all(order);
  return {dataset.subset(all.first(n_train)), dataset.subset(all.subspan(n_train))};
}

// ---------------------------------------------------------------------------
// Frequencies

FrequencyTable::FrequencyTable(std::vector<std::vector<std::int64_t>> counts, std::int64_t total)
    : counts_(std::move(counts)), total_(total) {
  if (total_ <= 0) throw std::invalid_argument("total_samples must be positive");
}

FrequencyTable count_frequencies(const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("cannot count frequencies of an empty dataset");
  std::vector<std::vector<std::int64_t>> counts(dataset.n_categorical());
  for (std::size_t j = 0; j < dataset.n_categorical(); ++j) {
    counts[j].assign(static_cast<std::size_t>(dataset.vocab_size(j)), 0);
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto ids = dataset.ids(i);
    for (std::size_t j = 0; j < ids.size(); ++j) ++counts[j][ids[j]];
  }
  return FrequencyTable(std::move(counts), static_cast<std::int64_t>(dataset.size()));
}

double batch_presence_probability(double p, std::int64_t batch_size, PresenceMode mode) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const double b = static_cast<double>(batch_size);
  if (mode == PresenceMode::kApprox) return std::min(1.0, b * p);
  // 1 - (1-p)^b without cancellation for small p.
  if (p == 1.0) return 1.0;
  return -std::expm1(b * std::log1p(-p));
}

Dataset top_k_collapse(const Dataset& dataset, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  Dataset out = dataset;
  if (dataset.empty()) return out;
  const auto freq = count_frequencies(dataset);
  for (std::size_t j = 0; j < dataset.n_categorical(); ++j) {
    const std::int64_t vocab = dataset.vocab_size(j);
    // A field with at most k + 1 ids has nothing to merge.
    if (vocab <= k + 1) continue;
    std::vector<std::int64_t> order(static_cast<std::size_t>(vocab));
    std::iota(order.begin(), order.end(), 0);
    const auto& counts = freq.counts(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int64_t a, std::int64_t b) { return counts[a] > counts[b]; });
    std::vector<std::int32_t> remap(static_cast<std::size_t>(vocab), static_cast<std::int32_t>(k));
    for (std::int64_t r = 0; r < k; ++r) remap[order[r]] = static_cast<std::int32_t>(r);
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto ids = out.mutable_ids(i);
      ids[j] = remap[ids[j]];
    }
    out.set_vocab_size(j, k + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batching

BatchIterator::BatchIterator(std::size_t n_samples, std::size_t batch_size, BatchMode mode,
                             std::uint64_t seed)
    : n_samples_(n_samples), batch_size_(batch_size), mode_(mode), rng_(seed) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (n_samples == 0) throw std::invalid_argument("cannot batch an empty dataset");
  if (mode == BatchMode::kShuffleEpoch && batch_size > n_samples) {
    throw std::invalid_argument("batch_size exceeds dataset size");
  }
  if (mode == BatchMode::kShuffleEpoch) {
    order_.resize(n_samples);
  }
}

void BatchIterator::reshuffle() {
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
  epoch_open_ = true;
}

std::optional<Batch> BatchIterator::next() {
  Batch batch;
  if (mode_ == BatchMode::kWithReplacement) {
    std::uniform_int_distribution<std::size_t> pick(0, n_samples_ - 1);
    batch.rows.resize(batch_size_);
    for (auto& r : batch.rows) r = pick(rng_);
    return batch;
  }
  if (!epoch_open_) reshuffle();
  if (cursor_ + batch_size_ > n_samples_) {
    epoch_open_ = false;
    return std::nullopt;
  }
  batch.rows.assign(order_.begin() + cursor_, order_.begin() + cursor_ + batch_size_);
  cursor_ += batch_size_;
  return batch;
}

BatchIterator make_batches(const Dataset& dataset, std::size_t batch_size, BatchMode mode,
                           std::uint64_t seed) {
  return BatchIterator(dataset.size(), batch_size, mode, seed);
}

}  // namespace cowclip
