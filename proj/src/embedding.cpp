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

#include "cowclip/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "cowclip/errors.hpp"

namespace cowclip {

EmbeddingTable::EmbeddingTable(std::vector<std::int64_t> vocab_sizes, int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
  fields_.reserve(vocab_sizes.size());
  for (const auto v : vocab_sizes) fields_.push_back(RowMatrix::Zero(v, dim));
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  if (dim_ != other.dim_ || seed_ != other.seed_ || fields_.size() != other.fields_.size()) {
    return false;
  }
  for (std::size_t f = 0; f < fields_.size(); ++f) {
    if (fields_[f].rows() != other.fields_[f].rows() || fields_[f] != other.fields_[f]) {
      return false;
    }
  }
  return true;
}

EmbeddingTable init_table(std::span<const std::int64_t> vocab_sizes, int dim, double init_sigma,
                          std::uint64_t seed) {
  if (!(init_sigma > 0.0)) throw std::invalid_argument("init_sigma must be > 0");
  EmbeddingTable table({vocab_sizes.begin(), vocab_sizes.end()}, dim);
  table.set_seed(seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_sigma);
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    auto& m = table.field(f);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  }
  return table;
}

LookupResult lookup_forward(const EmbeddingTable& table, const Dataset& dataset, const Batch& batch) {
  const std::size_t n_fields = table.n_fields();
  if (n_fields != dataset.n_categorical()) {
    throw std::invalid_argument("table and dataset disagree on categorical field count");
  }
  const int dim = table.dim();
  LookupResult out;
  out.embedded.resize(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(n_fields) * dim);
  out.record.batch_size = batch.size();
  out.record.n_fields = n_fields;
  out.record.ids.resize(batch.size() * n_fields);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto ids = dataset.ids(batch.rows[i]);
    for (std::size_t f = 0; f < n_fields; ++f) {
      const std::int32_t id = ids[f];
      if (id < 0 || id >= table.vocab_size(f)) {
        throw std::out_of_range("id " + std::to_string(id) + " outside embedding field " +
                                std::to_string(f));
      }
      out.record.ids[i * n_fields + f] = id;
      out.embedded.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f) * dim, 1, dim) =
          table.column(f, id);
    }
  }
  return out;
}

SparseGradient accumulate_gradients(const LookupRecord& record, const Eigen::MatrixXd& upstream,
                                    int dim) {
  const std::size_t b = record.batch_size;
  if (static_cast<std::size_t>(upstream.rows()) != b ||
      static_cast<std::size_t>(upstream.cols()) != record.n_fields * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("upstream gradient shape does not match lookup record");
  }
  SparseGradient out;
  out.dim = dim;
  out.fields.resize(record.n_fields);
  if (b == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(b);

  std::vector<std::pair<std::int32_t, std::uint32_t>> order(b);
  for (std::size_t f = 0; f < record.n_fields; ++f) {
    for (std::size_t i = 0; i < b; ++i) {
      order[i] = {record.id(i, f), static_cast<std::uint32_t>(i)};
    }
    // Sorting by (id, row) fixes the reduction order.
    std::sort(order.begin(), order.end());
    auto& fg = out.fields[f];
    std::size_t n_unique = 0;
    for (std::size_t i = 0; i < b; ++i) {
      if (i == 0 || order[i].first != order[i - 1].first) ++n_unique;
    }
    fg.ids.reserve(n_unique);
    fg.counts.reserve(n_unique);
    fg.grads = RowMatrix::Zero(static_cast<Eigen::Index>(n_unique), dim);
    Eigen::Index slot = -1;
    for (std::size_t i = 0; i < b; ++i) {
      const auto [id, row] = order[i];
      if (i == 0 || id != order[i - 1].first) {
        ++slot;
        fg.ids.push_back(id);
        fg.counts.push_back(0);
      }
      ++fg.counts.back();
      fg.grads.row(slot) += upstream.block(row, static_cast<Eigen::Index>(f) * dim, 1, dim);
    }
    fg.grads *= inv_b;
  }
  return out;
}

std::vector<Eigen::VectorXd> column_norms(const EmbeddingTable& table) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(table.n_fields());
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    out.push_back(table.field(f).rowwise().norm());
  }
  return out;
}

std::vector<Eigen::VectorXd> column_norms(const SparseGradient& grad) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(grad.fields.size());
  for (const auto& fg : grad.fields) {
    out.push_back(fg.size() == 0 ? Eigen::VectorXd() : Eigen::VectorXd(fg.grads.rowwise().norm()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::array<char, 8> kMagic{'C', 'C', 'E', 'M', 'B', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated embedding checkpoint");
  return value;
}

}  // namespace

void save_table(std::ostream& out, const EmbeddingTable& table) {
  static_assert(std::endian::native == std::endian::little, "checkpoints assume little endian");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, table.seed());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.n_fields()));
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(table.vocab_size(f)));
  }
  for (std::size_t f = 0; f < table.n_fields(); ++f) {
    const auto& m = table.field(f);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
}

void save_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  save_table(out, table);
  if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingTable load_table(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not an embedding checkpoint");
  const auto seed = get<std::uint64_t>(in);
  const auto dim = get<std::uint32_t>(in);
  const auto n_fields = get<std::uint32_t>(in);
  std::vector<std::int64_t> vocab(n_fields);
  for (auto& v : vocab) v = static_cast<std::int64_t>(get<std::uint64_t>(in));
  EmbeddingTable table(vocab, static_cast<int>(dim));
  table.set_seed(seed);
  for (std::size_t f = 0; f < n_fields; ++f) {
    auto& m = table.field(f);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw IoError("truncated embedding checkpoint");
  }
  return table;
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_table(in);
}

}  // namespace cowclip
