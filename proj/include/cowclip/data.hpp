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
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cowclip {

enum class FieldKind { kDense, kCategorical };

struct FieldSchema {
  FieldKind kind = FieldKind::kCategorical;
  // Number of distinct ids. Unused for dense fields.
  std::int64_t vocab_size = 0;
  std::string name;

  bool operator==(const FieldSchema&) const = default;
};

// Throws std::invalid_argument on duplicate names or a categorical field with
// vocab_size < 1. `allow_empty_vocab` admits vocab 0 (an empty TSV load).
void validate_schema(std::span<const FieldSchema> schema, bool allow_empty_vocab = false);

struct Sample {
  int label = 0;
  std::vector<double> dense;
  std::vector<std::int32_t> ids;

  bool operator==(const Sample&) const = default;
};

// Row store of labeled samples. The schema lists dense fields first, then
// categorical fields; `ids(i)[j]` is the id of the j-th categorical field.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<FieldSchema> schema, bool allow_empty_vocab = false);

  // Validates label, arity and id ranges.
  void append(const Sample& sample);
  void reserve(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const std::vector<FieldSchema>& schema() const { return schema_; }
  std::size_t n_dense() const { return n_dense_; }
  std::size_t n_categorical() const { return n_categorical_; }
  // Vocabulary of the j-th categorical field.
  std::int64_t vocab_size(std::size_t j) const { return schema_[n_dense_ + j].vocab_size; }
  std::vector<std::int64_t> vocab_sizes() const;

  int label(std::size_t i) const { return labels_[i]; }
  std::span<const double> dense(std::size_t i) const {
    return {dense_.data() + i * n_dense_, n_dense_};
  }
  std::span<const std::int32_t> ids(std::size_t i) const {
    return {ids_.data() + i * n_categorical_, n_categorical_};
  }
  Sample sample(std::size_t i) const;

  // Rows in the given order, same schema.
  Dataset subset(std::span<const std::size_t> rows) const;

  // Generator seed carried through the container format, when known.
  std::optional<std::uint64_t> seed() const { return seed_; }
  void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }

  // Used by relabeling transforms that rewrite the vocabulary.
  void set_vocab_size(std::size_t j, std::int64_t vocab);
  std::span<std::int32_t> mutable_ids(std::size_t i) {
    return {ids_.data() + i * n_categorical_, n_categorical_};
  }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<FieldSchema> schema_;
  std::size_t n_dense_ = 0;
  std::size_t n_categorical_ = 0;
  std::vector<std::uint8_t> labels_;
  std::vector<double> dense_;
  std::vector<std::int32_t> ids_;
  std::optional<std::uint64_t> seed_;
};

// ---------------------------------------------------------------------------
// Ingestion

enum class DenseTransform {
  kLog1p,     // v -> ln(1 + max(v, 0))
  kIdentity,  // v as parsed
};

struct TsvLayout {
  std::size_t n_dense = 13;
  std::size_t n_categorical = 26;
  DenseTransform transform = DenseTransform::kLog1p;
};

// Reads `label \t dense... \t categorical...` rows. Empty dense cells map to 0.
// Categorical tokens (the empty token included) get per-field ids in
// first-seen order. Throws ParseError with the 1-based row number.
Dataset load_ctr_tsv(std::istream& in, const TsvLayout& layout,
                     std::optional<std::size_t> max_rows = std::nullopt);
Dataset load_ctr_tsv(const std::filesystem::path& path, const TsvLayout& layout,
                     std::optional<std::size_t> max_rows = std::nullopt);

// Criteo display-ads layout: 13 integer fields I1..I13 and 26 tokens C1..C26.
Dataset load_criteo_tsv(const std::filesystem::path& path,
                        std::optional<std::size_t> max_rows = std::nullopt);

// Text container:
//   cowclip-dataset v1
//   seed <u64|none>
//   fields <count>
//   <dense|categorical> <vocab> <name>      (one line per field)
//   rows <count>
//   <label> <dense values as %.17g> <ids>   (tab separated)
void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic generation

struct ClickModel {
  double bias = 0.0;
  // Standard deviation of the ground-truth weight of each id, per categorical
  // field. Empty means 1 for every field.
  std::vector<double> field_scales;
  // Weight of each dense feature in the logit. Empty means 0.5 each.
  std::vector<double> dense_weights;
  // Strength of a pairwise id-id term between consecutive fields
  // (0 disables it).
  double interaction = 0.0;
};

struct SyntheticSpec {
  std::size_t n_dense = 2;
  std::size_t n_categorical = 6;
  // Either one entry per categorical field or a single shared entry.
  std::vector<std::int64_t> vocab_sizes{10000};
  double zipf_exponent = 1.2;
  bool uniform = false;
  ClickModel click_model;
};

// Ids are drawn per field from Zipf(zipf_exponent) over the vocabulary with id
// k having rank k + 1; labels are Bernoulli(sigmoid(score)).
Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t n_samples, std::uint64_t seed);

// Unnormalized Zipf probabilities 1 / rank^s normalized over `vocab` ranks.
std::vector<double> zipf_pmf(std::int64_t vocab, double exponent);

// Splits off the trailing `test_fraction` of a seeded permutation.
std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Frequency statistics

class FrequencyTable {
 public:
  FrequencyTable(std::vector<std::vector<std::int64_t>> counts, std::int64_t total);

  std::size_t n_fields() const { return counts_.size(); }
  std::int64_t total_samples() const { return total_; }
  std::int64_t count(std::size_t field, std::int64_t id) const { return counts_[field][id]; }
  double probability(std::size_t field, std::int64_t id) const {
    return static_cast<double>(counts_[field][id]) / static_cast<double>(total_);
  }
  const std::vector<std::int64_t>& counts(std::size_t field) const { return counts_[field]; }

 private:
  std::vector<std::vector<std::int64_t>> counts_;
  std::int64_t total_;
};

FrequencyTable count_frequencies(const Dataset& dataset);

enum class PresenceMode { kExact, kApprox };

// exact: 1 - (1 - p)^b.  approx: min(1, b p).
double batch_presence_probability(double p, std::int64_t batch_size, PresenceMode mode);

// Per categorical field the k most frequent ids become 0..k-1 (ties to the
// lower original id), everything else becomes k.
Dataset top_k_collapse(const Dataset& dataset, std::int64_t k);

// ---------------------------------------------------------------------------
// Batching

struct Batch {
  std::vector<std::size_t> rows;
  std::size_t size() const { return rows.size(); }
};

enum class BatchMode { kShuffleEpoch, kWithReplacement };

// shuffle_epoch: floor(N / b) disjoint batches per epoch from a fresh
// permutation, remainder dropped; next() returns nullopt at the end of each
// epoch and the following call starts the next one.
// with_replacement: i.i.d. uniform rows, never exhausted.
class BatchIterator {
 public:
  BatchIterator(std::size_t n_samples, std::size_t batch_size, BatchMode mode, std::uint64_t seed);

  std::optional<Batch> next();
  std::size_t batches_per_epoch() const { return n_samples_ / batch_size_; }

 private:
  void reshuffle();

  std::size_t n_samples_;
  std::size_t batch_size_;
  BatchMode mode_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  bool epoch_open_ = false;
};

BatchIterator make_batches(const Dataset& dataset, std::size_t batch_size, BatchMode mode,
                           std::uint64_t seed);

}  // namespace cowclip
