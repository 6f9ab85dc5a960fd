// Copyright 2026 The kpegraph Authors.
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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpe/corpus.hpp"
#include "kpe/error.hpp"

namespace kpe {

// Token embeddings are stored row-major in float32, exactly as in KPE1 files.
using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ContextualEmbeddings {
  std::string doc_id;
  EmbeddingMatrix h;  // n_tokens x d_c
};

inline constexpr int kDefaultFileContextDim = 768;
inline constexpr int kDefaultHashedContextDim = 192;

// Mean over the sub-word rows of each word. Each group is a
// (n_subwords x d_c) matrix; the result has one row per group.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pool_subwords(
    std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> groups) {
  if (groups.empty()) return {};
  const Eigen::Index dim = groups.front().cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(static_cast<Eigen::Index>(groups.size()), dim);
  for (std::size_t w = 0; w < groups.size(); ++w) {
    const auto& g = groups[w];
    if (g.rows() == 0) throw Error("sub-word group " + std::to_string(w) + " is empty");
    if (g.cols() != dim) throw ShapeError("sub-word groups differ in dimension");
    out.row(static_cast<Eigen::Index>(w)) = g.colwise().mean();
  }
  return out;
}

class EmbeddingProvider {
 public:
  enum class Kind { kFile, kHashed };

  virtual ~EmbeddingProvider() = default;
  virtual Kind kind() const = 0;
  virtual int dim() const = 0;
  // Human-readable source ("hashed:<seed>" or the file path).
  virtual std::string describe() const = 0;
  virtual ContextualEmbeddings embed(const Document& doc) const = 0;
};

// Deterministic, non-contextual: row t is a unit vector derived from
// (seed, lowercased token) only.
class HashedEmbeddingProvider final : public EmbeddingProvider {
 public:
  HashedEmbeddingProvider(std::uint64_t seed, int dim = kDefaultHashedContextDim);

  Kind kind() const override { return Kind::kHashed; }
  int dim() const override { return dim_; }
  std::string describe() const override;
  ContextualEmbeddings embed(const Document& doc) const override;

  Eigen::VectorXf token_vector(const std::string& token) const;

 private:
  std::uint64_t seed_;
  int dim_;
};

// Reads a whole KPE1 file into memory; rows are returned verbatim.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::filesystem::path& path);

  Kind kind() const override { return Kind::kFile; }
  int dim() const override { return dim_; }
  std::string describe() const override { return path_.string(); }
  ContextualEmbeddings embed(const Document& doc) const override;

  std::size_t num_documents() const { return docs_.size(); }

 private:
  std::filesystem::path path_;
  int dim_ = 0;
  std::map<std::string, EmbeddingMatrix> docs_;
};

// "hashed:<seed>" or a KPE1 path. `hashed_dim` sets d_c for the hashed kind.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec,
                                                 int hashed_dim = kDefaultHashedContextDim);

ContextualEmbeddings embed_document(const EmbeddingProvider& provider, const Document& doc);

// "KPE1" | u32 d_c | per document: u32 id_len, id bytes, u32 n, n*d_c float32
// (row-major, little-endian), until end of file.
void write_kpe1(const std::filesystem::path& path, int dim, std::span<const ContextualEmbeddings> docs);
std::pair<int, std::vector<ContextualEmbeddings>> read_kpe1(const std::filesystem::path& path);

}  // namespace kpe
