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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "kpe/binary_io.hpp"
#include "kpe/cooc_graph.hpp"
#include "kpe/error.hpp"
#include "kpe/random.hpp"
#include "kpe/text.hpp"

namespace kpe {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class Activation { kRelu, kIdentity };

inline constexpr int kDefaultGcnDim = 192;

// Node-embedding GCN: a trainable EMBED table of initial features x_v and K
// weight matrices. W_k maps CONCAT(h_v^{k-1}, h_{N(v)}^k) to layer k, so it
// has shape d_k x 2*d_{k-1}; the left block acts on the node itself, the
// right block on the aggregated neighborhood. No biases.
template <typename Scalar = double>
struct GcnModel {
  MatrixX<Scalar> embed_table;  // |V| x d_0
  std::vector<MatrixX<Scalar>> weights;
  Activation activation = Activation::kRelu;

  int depth() const { return static_cast<int>(weights.size()); }
  Eigen::Index vocab_size() const { return embed_table.rows(); }
  Eigen::Index output_dim() const { return weights.empty() ? embed_table.cols() : weights.back().rows(); }

  std::vector<int> dims() const {
    std::vector<int> d{static_cast<int>(embed_table.cols())};
    for (const auto& w : weights) d.push_back(static_cast<int>(w.rows()));
    return d;
  }

  template <typename Other>
  GcnModel<Other> cast() const {
    GcnModel<Other> m;
    m.embed_table = embed_table.template cast<Other>();
    for (const auto& w : weights) m.weights.push_back(w.template cast<Other>());
    m.activation = activation;
    return m;
  }
};

namespace detail {

inline void check_dims(std::span<const int> dims) {
  if (dims.size() < 2) throw Error("GCN dims need an input size and at least one layer");
  for (int d : dims)
    if (d <= 0) throw Error("GCN dims must be positive");
}

template <typename Scalar>
void glorot_fill(MatrixX<Scalar>& m, double fan_in, double fan_out, SplitMix64& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(rng.uniform(-a, a));
}

template <typename Scalar>
void init_weights(GcnModel<Scalar>& model, std::span<const int> dims, SplitMix64& rng) {
  for (std::size_t k = 1; k < dims.size(); ++k) {
    MatrixX<Scalar> w(dims[k], 2 * dims[k - 1]);
    glorot_fill(w, 2.0 * dims[k - 1], dims[k], rng);
    model.weights.push_back(std::move(w));
  }
}

}  // namespace detail

// dims = {d_0, d_1, ..., d_K}. Every parameter ~ U[-a, a],
// a = sqrt(6 / (fan_in + fan_out)); the EMBED table uses fan_in = |V|.
template <typename Scalar = double>
GcnModel<Scalar> init_model(Eigen::Index vocab_size, std::span<const int> dims, std::uint64_t seed) {
  if (vocab_size <= 0) throw Error("GCN vocabulary must be nonempty");
  detail::check_dims(dims);
  SplitMix64 rng(seed);
  GcnModel<Scalar> model;
  model.embed_table.resize(vocab_size, dims[0]);
  detail::glorot_fill(model.embed_table, static_cast<double>(vocab_size), dims[0], rng);
  detail::init_weights(model, dims, rng);
  return model;
}

// Like init_model, but row v of the EMBED table is drawn from a stream keyed by
// (seed, vocab[v]) and scaled to d_0: the same word starts from the same
// features in every graph, and all graphs share the initial W_k.
template <typename Scalar = double>
GcnModel<Scalar> init_model_for_vocab(std::span<const std::string> vocab, std::span<const int> dims,
                                      std::uint64_t seed) {
  if (vocab.empty()) throw Error("GCN vocabulary must be nonempty");
  detail::check_dims(dims);
  GcnModel<Scalar> model;
  model.embed_table.resize(static_cast<Eigen::Index>(vocab.size()), dims[0]);
  const double a = std::sqrt(3.0 / dims[0]);  // unit expected row norm
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    SplitMix64 row_rng(fnv1a(vocab[v], mix_seed(seed, 0x454d424544ULL)));
    for (int c = 0; c < dims[0]; ++c)
      model.embed_table(static_cast<Eigen::Index>(v), c) = static_cast<Scalar>(row_rng.uniform(-a, a));
  }
  SplitMix64 rng(mix_seed(seed, 0x57454947ULL));
  detail::init_weights(model, dims, rng);
  return model;
}

// Row v holds ew_{u-v} / |N(v)| at column u: applying it to H gives the mean
// over neighbors of the edge-weighted neighbor rows. Isolated nodes get a
// zero row.
template <typename Scalar = double>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> mean_aggregator(const CoocGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(graph.num_edges() * 2);
  const auto& adj = graph.adjacency();
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto& nbrs = adj[static_cast<std::size_t>(v)];
    if (nbrs.empty()) continue;
    const double inv_deg = 1.0 / static_cast<double>(nbrs.size());
    for (const auto& nb : nbrs) trips.emplace_back(v, nb.node, static_cast<Scalar>(nb.weight * inv_deg));
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> p(n, n);
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

// Per-layer intermediates kept for backpropagation.
template <typename Scalar>
struct GcnLayerTape {
  MatrixX<Scalar> input;      // H^{k-1}
  MatrixX<Scalar> message;    // mean-aggregated neighborhood
  MatrixX<Scalar> pre;        // W_k CONCAT(...) before sigma
  MatrixX<Scalar> activated;  // sigma(pre), before normalization
  VectorX<Scalar> scale;      // per-row normalization factor (1 for zero rows)
};

template <typename Scalar>
struct GcnTape {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> aggregator;
  std::vector<GcnLayerTape<Scalar>> layers;
  MatrixX<Scalar> z;  // |V| x d_K
};

template <typename Scalar>
struct GcnGradients {
  MatrixX<Scalar> embed_table;
  std::vector<MatrixX<Scalar>> weights;
};

namespace detail {

template <typename Scalar>
void check_compatible(const GcnModel<Scalar>& model, const CoocGraph& graph) {
  if (model.vocab_size() != static_cast<Eigen::Index>(graph.num_nodes()))
    throw ShapeError("GCN vocabulary size " + std::to_string(model.vocab_size()) +
                     " does not match graph size " + std::to_string(graph.num_nodes()));
  if (model.weights.empty()) throw ShapeError("GCN has no layers");
  Eigen::Index d = model.embed_table.cols();
  for (const auto& w : model.weights) {
    if (w.cols() != 2 * d) throw ShapeError("GCN weight shapes do not chain");
    d = w.rows();
  }
}

template <typename Scalar>
MatrixX<Scalar> activate(const MatrixX<Scalar>& pre, Activation a) {
  if (a == Activation::kIdentity) return pre;
  return pre.cwiseMax(Scalar(0));
}

}  // namespace detail

// Algorithm: h^0 = x; for k = 1..K:
//   m_v = mean_{u in N(v)} ew_{u-v} h_u^{k-1}
//   h_v^k = sigma(W_k [h_v^{k-1}; m_v]);  h_v^k /= sqrt(k * ||h_v^k||^2)
// Rows that are exactly zero skip the normalization. Returns the tape.
template <typename Scalar>
GcnTape<Scalar> forward_with_tape(const GcnModel<Scalar>& model, const CoocGraph& graph) {
  detail::check_compatible(model, graph);
  GcnTape<Scalar> tape;
  tape.aggregator = mean_aggregator<Scalar>(graph);
  MatrixX<Scalar> h = model.embed_table;
  for (int k = 1; k <= model.depth(); ++k) {
    const auto& w = model.weights[static_cast<std::size_t>(k - 1)];
    const Eigen::Index d_prev = h.cols();
    GcnLayerTape<Scalar> layer;
    layer.message = tape.aggregator * h;
    layer.pre = h * w.leftCols(d_prev).transpose() + layer.message * w.rightCols(d_prev).transpose();
    layer.activated = detail::activate(layer.pre, model.activation);
    layer.scale.resize(h.rows());
    MatrixX<Scalar> out = layer.activated;
    for (Eigen::Index v = 0; v < out.rows(); ++v) {
      const Scalar sq = out.row(v).squaredNorm();
      layer.scale(v) = sq > Scalar(0) ? Scalar(1) / std::sqrt(Scalar(k) * sq) : Scalar(1);
      out.row(v) *= layer.scale(v);
    }
    layer.input = std::move(h);
    h = std::move(out);
    tape.layers.push_back(std::move(layer));
  }
  tape.z = std::move(h);
  return tape;
}

template <typename Scalar>
MatrixX<Scalar> forward(const GcnModel<Scalar>& model, const CoocGraph& graph) {
  return forward_with_tape(model, graph).z;
}

// Chain rule from dL/dZ back to the EMBED table and every W_k.
template <typename Scalar>
GcnGradients<Scalar> backward(const GcnModel<Scalar>& model, const GcnTape<Scalar>& tape,
                              const MatrixX<Scalar>& grad_z) {
  if (grad_z.rows() != tape.z.rows() || grad_z.cols() != tape.z.cols())
    throw ShapeError("gradient shape does not match Z");
  GcnGradients<Scalar> grads;
  grads.weights.resize(model.weights.size());
  MatrixX<Scalar> g = grad_z;
  for (int k = model.depth(); k >= 1; --k) {
    const auto& layer = tape.layers[static_cast<std::size_t>(k - 1)];
    const auto& w = model.weights[static_cast<std::size_t>(k - 1)];
    const Eigen::Index d_prev = layer.input.cols();

    // y = s a with s = 1/sqrt(k a.a):  dL/da = s (g - a (a.g) / (a.a)).
    MatrixX<Scalar> g_act(g.rows(), g.cols());
    for (Eigen::Index v = 0; v < g.rows(); ++v) {
      const auto a = layer.activated.row(v);
      const Scalar sq = a.squaredNorm();
      if (sq > Scalar(0)) {
        g_act.row(v) = layer.scale(v) * (g.row(v) - a * (a.dot(g.row(v)) / sq));
      } else {
        g_act.row(v) = g.row(v);
      }
    }
    MatrixX<Scalar> g_pre = g_act;
    if (model.activation == Activation::kRelu)
      g_pre = (layer.pre.array() > Scalar(0)).select(g_act, Scalar(0));

    MatrixX<Scalar> gw(w.rows(), w.cols());
    gw.leftCols(d_prev).noalias() = g_pre.transpose() * layer.input;
    gw.rightCols(d_prev).noalias() = g_pre.transpose() * layer.message;
    grads.weights[static_cast<std::size_t>(k - 1)] = std::move(gw);

    const MatrixX<Scalar> g_msg = g_pre * w.rightCols(d_prev);
    MatrixX<Scalar> g_in = g_pre * w.leftCols(d_prev);
    g_in.noalias() += tape.aggregator.transpose() * g_msg;
    g = std::move(g_in);
  }
  grads.embed_table = std::move(g);
  return grads;
}

// "GCN1" | u32 vocab_size | u32 n_dims | u32 dims[n_dims] |
// embed_table, W_1..W_K as row-major little-endian float32.
template <typename Scalar>
void save_gcn(std::ostream& out, const GcnModel<Scalar>& model) {
  io::write_magic(out, "GCN1");
  io::write_u32(out, static_cast<std::uint32_t>(model.vocab_size()));
  const auto dims = model.dims();
  io::write_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) io::write_u32(out, static_cast<std::uint32_t>(d));
  io::write_matrix_f32(out, model.embed_table);
  for (const auto& w : model.weights) io::write_matrix_f32(out, w);
}

template <typename Scalar = double>
GcnModel<Scalar> load_gcn(std::istream& in) {
  constexpr std::string_view what = "GCN checkpoint";
  io::expect_magic(in, "GCN1", what);
  const auto vocab = io::read_u32(in, what);
  const auto n_dims = io::read_u32(in, what);
  if (n_dims < 2 || n_dims > 1024) throw LoadError("GCN checkpoint: bad layer count");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < n_dims; ++i) dims.push_back(static_cast<int>(io::read_u32(in, what)));
  GcnModel<Scalar> model;
  model.embed_table = io::read_matrix_f32<Scalar>(in, vocab, dims[0], what);
  for (std::size_t k = 1; k < dims.size(); ++k)
    model.weights.push_back(io::read_matrix_f32<Scalar>(in, dims[k], 2 * dims[k - 1], what));
  return model;
}

template <typename Scalar>
void save_gcn(const std::filesystem::path& path, const GcnModel<Scalar>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  save_gcn(out, model);
}

template <typename Scalar = double>
GcnModel<Scalar> load_gcn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  return load_gcn<Scalar>(in);
}

}  // namespace kpe
