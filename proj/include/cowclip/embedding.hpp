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

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cowclip/data.hpp"

namespace cowclip {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One matrix per categorical field, shape (vocab x dim). Row k holds the
// embedding vector of id k; "column" in the CowClip sense is one such row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::int64_t> vocab_sizes, int dim);

  int dim() const { return dim_; }
  std::size_t n_fields() const { return fields_.size(); }
  std::int64_t vocab_size(std::size_t field) const { return fields_[field].rows(); }

  RowMatrix& field(std::size_t f) { return fields_[f]; }
  const RowMatrix& field(std::size_t f) const { return fields_[f]; }

  auto column(std::size_t f, std::int64_t id) { return fields_[f].row(id); }
  auto column(std::size_t f, std::int64_t id) const { return fields_[f].row(id); }

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  bool operator==(const EmbeddingTable& other) const;

 private:
  std::vector<RowMatrix> fields_;
  int dim_ = 0;
  std::uint64_t seed_ = 0;
};

// Entries i.i.d. Normal(0, init_sigma).
EmbeddingTable init_table(std::span<const std::int64_t> vocab_sizes, int dim, double init_sigma,
                          std::uint64_t seed);
inline EmbeddingTable init_table(const Dataset& schema_source, int dim, double init_sigma,
                                 std::uint64_t seed) {
  const auto vocab = schema_source.vocab_sizes();
  return init_table(vocab, dim, init_sigma, seed);
}

// Touched columns of one field, ids ascending.
struct FieldGradient {
  std::vector<std::int32_t> ids;
  // Number of batch samples selecting each id.
  std::vector<std::int32_t> counts;
  RowMatrix grads;  // (ids.size() x dim)

  std::size_t size() const { return ids.size(); }
  bool operator==(const FieldGradient& other) const {
    return ids == other.ids && counts == other.counts && grads.rows() == other.grads.rows() &&
           grads.cols() == other.grads.cols() && grads == other.grads;
  }
};

struct SparseGradient {
  int dim = 0;
  std::vector<FieldGradient> fields;

  bool operator==(const SparseGradient&) const = default;
};

// Which id each batch row selected, per field (row-major, batch x fields).
struct LookupRecord {
  std::size_t batch_size = 0;
  std::size_t n_fields = 0;
  std::vector<std::int32_t> ids;

  std::int32_t id(std::size_t row, std::size_t field) const { return ids[row * n_fields + field]; }
};

struct LookupResult {
  // Row i is the concatenation over fields of the selected columns.
  Eigen::MatrixXd embedded;
  LookupRecord record;
};

// Throws std::out_of_range on an id outside a field's vocabulary.
LookupResult lookup_forward(const EmbeddingTable& table, const Dataset& dataset, const Batch& batch);

// Per touched (field, id): (1/b) * sum of the selecting rows' gradient slices,
// with cnt = number of such rows. `upstream` is (batch x fields*dim).
SparseGradient accumulate_gradients(const LookupRecord& record, const Eigen::MatrixXd& upstream,
                                    int dim);

// Per field, the L2 norm of every row.
std::vector<Eigen::VectorXd> column_norms(const EmbeddingTable& table);
// Per field, aligned with FieldGradient::ids.
std::vector<Eigen::VectorXd> column_norms(const SparseGradient& grad);

// Binary checkpoint:
//   magic "CCEMB001", u64 seed, u32 dim, u32 n_fields, u64 vocab per field,
//   then the raw little-endian doubles of each field, row-major.
void save_table(std::ostream& out, const EmbeddingTable& table);
void save_table(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_table(std::istream& in);
EmbeddingTable load_table(const std::filesystem::path& path);

}  // namespace cowclip
