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

#include "kpe/embeddings.hpp"

#include <cmath>
#include <fstream>

#include "kpe/binary_io.hpp"
#include "kpe/random.hpp"
#include "kpe/text.hpp"

namespace kpe {

HashedEmbeddingProvider::HashedEmbeddingProvider(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim <= 0) throw Error("embedding dimension must be positive");
}

std::string HashedEmbeddingProvider::describe() const { return "hashed:" + std::to_string(seed_); }

Eigen::VectorXf HashedEmbeddingProvider::token_vector(const std::string& token) const {
  SplitMix64 rng(fnv1a(to_lower(token), mix_seed(seed_, 0x4354584eULL)));
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = rng.normal();
  double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v(0) = 1.0;
    norm = 1.0;
  }
  return (v / norm).cast<float>();
}

ContextualEmbeddings HashedEmbeddingProvider::embed(const Document& doc) const {
  ContextualEmbeddings out{doc.id, EmbeddingMatrix(static_cast<Eigen::Index>(doc.tokens.size()), dim_)};
  for (std::size_t t = 0; t < doc.tokens.size(); ++t)
    out.h.row(static_cast<Eigen::Index>(t)) = token_vector(doc.tokens[t]).transpose();
  return out;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::filesystem::path& path) : path_(path) {
  auto [dim, docs] = read_kpe1(path);
  dim_ = dim;
  for (auto& d : docs) {
    const std::string id = d.doc_id;
    if (!docs_.emplace(id, std::move(d.h)).second)
      throw LoadError(path.string() + ": duplicate document '" + id + "'");
  }
}

ContextualEmbeddings FileEmbeddingProvider::embed(const Document& doc) const {
  auto it = docs_.find(doc.id);
  if (it == docs_.end()) throw Error("embedding file has no rows for document '" + doc.id + "'");
  if (it->second.rows() != static_cast<Eigen::Index>(doc.tokens.size()))
    throw Error("embedding rows for document '" + doc.id + "': expected " +
                std::to_string(doc.tokens.size()) + " tokens, file has " + std::to_string(it->second.rows()));
  return {doc.id, it->second};
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec, int hashed_dim) {
  constexpr std::string_view prefix = "hashed:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string seed = spec.substr(prefix.size());
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(seed, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (seed.empty() || used != seed.size()) throw Error("bad hashed provider seed in '" + spec + "'");
    return std::make_unique<HashedEmbeddingProvider>(value, hashed_dim);
  }
  return std::make_unique<FileEmbeddingProvider>(spec);
}

ContextualEmbeddings embed_document(const EmbeddingProvider& provider, const Document& doc) {
  auto out = provider.embed(doc);
  if (out.h.rows() != static_cast<Eigen::Index>(doc.tokens.size()))
    throw Error("embedding rows for document '" + doc.id + "': expected " +
                std::to_string(doc.tokens.size()) + ", got " + std::to_string(out.h.rows()));
  return out;
}

void write_kpe1(const std::filesystem::path& path, int dim, std::span<const ContextualEmbeddings> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  io::write_magic(out, "KPE1");
  io::write_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& d : docs) {
    if (d.h.cols() != dim) throw ShapeError("document '" + d.doc_id + "' has the wrong embedding width");
    io::write_u32(out, static_cast<std::uint32_t>(d.doc_id.size()));
    out.write(d.doc_id.data(), static_cast<std::streamsize>(d.doc_id.size()));
    io::write_u32(out, static_cast<std::uint32_t>(d.h.rows()));
    io::write_matrix_f32(out, d.h);
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::pair<int, std::vector<ContextualEmbeddings>> read_kpe1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open embedding file '" + path.string() + "'");
  const std::string what = path.string();
  io::expect_magic(in, "KPE1", what);
  const auto dim = static_cast<int>(io::read_u32(in, what));
  if (dim <= 0) throw LoadError(what + ": embedding dimension must be positive");
  std::vector<ContextualEmbeddings> docs;
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto id_len = io::read_u32(in, what);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (!in) throw LoadError(what + ": truncated document id");
    const auto n = io::read_u32(in, what);
    ContextualEmbeddings d{std::move(id), EmbeddingMatrix(n, dim)};
    for (Eigen::Index r = 0; r < d.h.rows(); ++r)
      for (Eigen::Index c = 0; c < dim; ++c) d.h(r, c) = io::read_f32(in, what);
    docs.push_back(std::move(d));
  }
  return {dim, std::move(docs)};
}

}  // namespace kpe
