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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kpe/binary_io.hpp"
#include "kpe/corpus.hpp"
#include "kpe/error.hpp"
#include "kpe/gcn.hpp"
#include "kpe/random.hpp"

namespace kpe {

inline constexpr int kDefaultProjectionDim = 192;
inline constexpr int kDefaultChunkLimit = 512;

// Graph-enhanced tagger head:
//   logits_t = C [relu(P_g z_t + b_g); relu(P_c h_t + b_c)] + b_C
// followed by a softmax over (B, I, O). With use_graph == false the graph
// projection is held at zero and never updated, which is the no-graph
// baseline.
template <typename Scalar = double>
struct TaggerModel {
  MatrixX<Scalar> graph_proj;  // p x d_g
  VectorX<Scalar> graph_bias;  // p
  MatrixX<Scalar> ctx_proj;    // p x d_c
  VectorX<Scalar> ctx_bias;    // p
  MatrixX<Scalar> classifier;  // 3 x 2p
  VectorX<Scalar> class_bias;  // 3
  bool use_graph = true;

  Eigen::Index graph_dim() const { return graph_proj.cols(); }
  Eigen::Index context_dim() const { return ctx_proj.cols(); }
  Eigen::Index projection_dim() const { return graph_proj.rows(); }
};

template <typename Scalar>
struct TagPrediction {
  MatrixX<Scalar> probs;  // n x 3, columns B, I, O
  std::vector<Tag> labels;
  std::size_t size() const { return labels.size(); }
};

template <typename Scalar>
struct TaggerGradients {
  MatrixX<Scalar> graph_proj, ctx_proj, classifier;
  VectorX<Scalar> graph_bias, ctx_bias, class_bias;
};

template <typename Scalar = double>
TaggerModel<Scalar> init_tagger(Eigen::Index graph_dim, Eigen::Index context_dim, Eigen::Index proj_dim,
                                std::uint64_t seed, bool use_graph = true) {
  if (graph_dim <= 0 || context_dim <= 0 || proj_dim <= 0) throw Error("tagger dimensions must be positive");
  SplitMix64 rng(seed);
  TaggerModel<Scalar> m;
  m.use_graph = use_graph;
  m.graph_proj.resize(proj_dim, graph_dim);
  detail::glorot_fill(m.graph_proj, static_cast<double>(graph_dim), static_cast<double>(proj_dim), rng);
  m.ctx_proj.resize(proj_dim, context_dim);
  detail::glorot_fill(m.ctx_proj, static_cast<double>(context_dim), static_cast<double>(proj_dim), rng);
  m.classifier.resize(kNumTags, 2 * proj_dim);
  detail::glorot_fill(m.classifier, 2.0 * static_cast<double>(proj_dim), kNumTags, rng);
  m.graph_bias = VectorX<Scalar>::Zero(proj_dim);
  m.ctx_bias = VectorX<Scalar>::Zero(proj_dim);
  m.class_bias = VectorX<Scalar>::Zero(kNumTags);
  if (!use_graph) m.graph_proj.setZero();
  return m;
}

template <typename Scalar>
struct TaggerTape {
  MatrixX<Scalar> graph_pre, ctx_pre;  // n x p
  MatrixX<Scalar> fused;               // n x 2p, after ReLU
  MatrixX<Scalar> probs;               // n x 3
};

// Row-wise softmax with max subtraction.
template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& logits) {
  MatrixX<Scalar> p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

template <typename Scalar, typename ZDerived, typename HDerived>
TaggerTape<Scalar> tag_forward_with_tape(const TaggerModel<Scalar>& model, const Eigen::MatrixBase<ZDerived>& z_seq,
                                         const Eigen::MatrixBase<HDerived>& h_seq) {
  if (z_seq.rows() != h_seq.rows())
    throw ShapeError("graph and contextual sequences differ in length (" + std::to_string(z_seq.rows()) +
                     " vs " + std::to_string(h_seq.rows()) + ")");
  if (z_seq.cols() != model.graph_dim() || h_seq.cols() != model.context_dim())
    throw ShapeError("tagger input width mismatch");
  const Eigen::Index p = model.projection_dim();
  TaggerTape<Scalar> tape;
  tape.graph_pre = (z_seq.template cast<Scalar>() * model.graph_proj.transpose()).rowwise() +
                   model.graph_bias.transpose();
  tape.ctx_pre = (h_seq.template cast<Scalar>() * model.ctx_proj.transpose()).rowwise() +
                 model.ctx_bias.transpose();
  tape.fused.resize(z_seq.rows(), 2 * p);
  tape.fused.leftCols(p) = tape.graph_pre.cwiseMax(Scalar(0));
  tape.fused.rightCols(p) = tape.ctx_pre.cwiseMax(Scalar(0));
  const MatrixX<Scalar> logits =
      (tape.fused * model.classifier.transpose()).rowwise() + model.class_bias.transpose();
  tape.probs = softmax_rows(logits);
  return tape;
}

template <typename Scalar, typename ZDerived, typename HDerived>
TagPrediction<Scalar> tag_forward(const TaggerModel<Scalar>& model, const Eigen::MatrixBase<ZDerived>& z_seq,
                                  const Eigen::MatrixBase<HDerived>& h_seq) {
  TagPrediction<Scalar> out;
  out.probs = tag_forward_with_tape(model, z_seq, h_seq).probs;
  out.labels.reserve(static_cast<std::size_t>(out.probs.rows()));
  for (Eigen::Index t = 0; t < out.probs.rows(); ++t) {
    Eigen::Index best;
    out.probs.row(t).maxCoeff(&best);
    out.labels.push_back(static_cast<Tag>(best));
  }
  return out;
}

// Mean token cross-entropy; fills `grads` when non-null.
template <typename Scalar, typename ZDerived, typename HDerived>
Scalar tagger_loss(const TaggerModel<Scalar>& model, const Eigen::MatrixBase<ZDerived>& z_seq,
                   const Eigen::MatrixBase<HDerived>& h_seq, std::span<const Tag> labels,
                   TaggerGradients<Scalar>* grads = nullptr, std::size_t* correct = nullptr) {
  if (static_cast<Eigen::Index>(labels.size()) != z_seq.rows()) throw ShapeError("label count mismatch");
  if (labels.empty()) throw Error("tagger loss over an empty sequence");
  const auto tape = tag_forward_with_tape(model, z_seq, h_seq);
  const Eigen::Index n = tape.probs.rows();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  Scalar loss(0);
  MatrixX<Scalar> d_logits = tape.probs;
  for (Eigen::Index t = 0; t < n; ++t) {
    const int y = static_cast<int>(labels[static_cast<std::size_t>(t)]);
    loss -= std::log(std::max(tape.probs(t, y), std::numeric_limits<Scalar>::min()));
    d_logits(t, y) -= Scalar(1);
    if (correct) {
      Eigen::Index best;
      tape.probs.row(t).maxCoeff(&best);
      if (best == y) ++*correct;
    }
  }
  loss *= inv_n;
  if (!grads) return loss;

  d_logits *= inv_n;
  const Eigen::Index p = model.projection_dim();
  grads->classifier.noalias() = d_logits.transpose() * tape.fused;
  grads->class_bias = d_logits.colwise().sum().transpose();
  const MatrixX<Scalar> d_fused = d_logits * model.classifier;
  const MatrixX<Scalar> d_graph = (tape.graph_pre.array() > Scalar(0)).select(d_fused.leftCols(p), Scalar(0));
  const MatrixX<Scalar> d_ctx = (tape.ctx_pre.array() > Scalar(0)).select(d_fused.rightCols(p), Scalar(0));
  if (model.use_graph) {
    grads->graph_proj.noalias() = d_graph.transpose() * z_seq.template cast<Scalar>();
    grads->graph_bias = d_graph.colwise().sum().transpose();
  } else {
    grads->graph_proj = MatrixX<Scalar>::Zero(model.graph_proj.rows(), model.graph_proj.cols());
    grads->graph_bias = VectorX<Scalar>::Zero(model.graph_bias.size());
  }
  grads->ctx_proj.noalias() = d_ctx.transpose() * h_seq.template cast<Scalar>();
  grads->ctx_bias = d_ctx.colwise().sum().transpose();
  return loss;
}

// |a - n| / max(|a|, |n|, floor). The floor sits above central-difference
// round-off, so entries whose true gradient is zero are not scored on noise.
inline constexpr double kGradcheckFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / scale;
}

// Analytic tagger gradients against central finite differences over every
// parameter; returns the largest relative error.
template <typename ZDerived, typename HDerived>
double gradcheck_tagger(TaggerModel<double> model, const Eigen::MatrixBase<ZDerived>& z_seq,
                        const Eigen::MatrixBase<HDerived>& h_seq, std::span<const Tag> labels,
                        double step = 1e-4) {
  TaggerGradients<double> g;
  tagger_loss(model, z_seq, h_seq, labels, &g);
  double worst = 0.0;
  auto check = [&](auto& param, const auto& grad) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + step;
      const double up = tagger_loss(model, z_seq, h_seq, labels);
      param.data()[i] = saved - step;
      const double down = tagger_loss(model, z_seq, h_seq, labels);
      param.data()[i] = saved;
      worst = std::max(worst, relative_error(grad.data()[i], (up - down) / (2.0 * step)));
    }
  };
  if (model.use_graph) {
    check(model.graph_proj, g.graph_proj);
    check(model.graph_bias, g.graph_bias);
  }
  check(model.ctx_proj, g.ctx_proj);
  check(model.ctx_bias, g.ctx_bias);
  check(model.classifier, g.classifier);
  check(model.class_bias, g.class_bias);
  return worst;
}

struct Span {
  std::size_t begin;
  std::size_t end;
  bool operator==(const Span&) const = default;
};

// [0, L), [L, 2L), ...; the last span may be shorter. Empty for n == 0.
std::vector<Span> chunk_sequence(std::size_t n, std::size_t limit);

// One training/inference unit: a chunk of a document.
template <typename Scalar>
struct TaggedSequence {
  MatrixX<Scalar> z;  // n x d_g
  MatrixX<Scalar> h;  // n x d_c
  std::vector<Tag> labels;
};

struct TaggerTrainOptions {
  int batch_size = 10;
  int epochs = 100;
  double learning_rate = 5e-4;
  int patience = 5;
  double anneal = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
};

struct TaggerEpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double valid_loss = 0.0;
};

struct TaggerTrainLog {
  std::vector<TaggerEpochLog> epochs;
  int best_epoch = 0;
};

nlohmann::json to_json(const TaggerTrainLog& log);

// Decoupled weight-decay Adam over a fixed list of parameter blocks.
template <typename Scalar>
class AdamW {
 public:
  AdamW(const TaggerTrainOptions& opt, std::size_t n_blocks) : opt_(opt), m_(n_blocks), v_(n_blocks) {}

  template <typename Param, typename Grad>
  void update(std::size_t block, Param& param, const Grad& grad, double lr) {
    auto& m = m_[block];
    auto& v = v_[block];
    if (m.size() == 0) {
      m = MatrixX<Scalar>::Zero(param.rows(), param.cols());
      v = MatrixX<Scalar>::Zero(param.rows(), param.cols());
    }
    const auto b1 = static_cast<Scalar>(opt_.beta1), b2 = static_cast<Scalar>(opt_.beta2);
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step_));
    const auto rate = static_cast<Scalar>(lr);
    param.array() -= rate * static_cast<Scalar>(opt_.weight_decay) * param.array();
    param.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + static_cast<Scalar>(opt_.epsilon));
  }

  void next_step() { ++step_; }

 private:
  TaggerTrainOptions opt_;
  std::vector<MatrixX<Scalar>> m_, v_;
  long step_ = 1;
};

namespace detail {

template <typename Scalar>
TaggedSequence<Scalar> stack_sequences(std::span<const TaggedSequence<Scalar>> all,
                                       std::span<const std::size_t> picks) {
  Eigen::Index rows = 0;
  for (auto i : picks) rows += all[i].z.rows();
  TaggedSequence<Scalar> out;
  out.z.resize(rows, all[picks[0]].z.cols());
  out.h.resize(rows, all[picks[0]].h.cols());
  Eigen::Index r = 0;
  for (auto i : picks) {
    const auto& s = all[i];
    out.z.middleRows(r, s.z.rows()) = s.z;
    out.h.middleRows(r, s.h.rows()) = s.h;
    out.labels.insert(out.labels.end(), s.labels.begin(), s.labels.end());
    r += s.z.rows();
  }
  return out;
}

template <typename Scalar>
double mean_token_loss(const TaggerModel<Scalar>& model, std::span<const TaggedSequence<Scalar>> seqs) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : seqs) {
    if (s.labels.empty()) continue;
    total += static_cast<double>(tagger_loss(model, s.z, s.h, s.labels)) * static_cast<double>(s.labels.size());
    tokens += s.labels.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

}  // namespace detail

// Mini-batch AdamW on mean token cross-entropy. After each epoch the
// validation loss is measured (training loss when `valid` is empty); when it
// has not improved for `patience` epochs the learning rate is multiplied by
// `anneal`. Returns the best-validation parameters.
template <typename Scalar>
std::pair<TaggerModel<Scalar>, TaggerTrainLog> train_tagger(TaggerModel<Scalar> model,
                                                            std::span<const TaggedSequence<Scalar>> train,
                                                            std::span<const TaggedSequence<Scalar>> valid,
                                                            const TaggerTrainOptions& opt) {
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.patience < 1)
    throw Error("tagger epochs, batch size and patience must be positive");
  if (!(opt.anneal > 0.0 && opt.anneal <= 1.0)) throw Error("anneal factor must be in (0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].labels.size() != static_cast<std::size_t>(train[i].z.rows()))
      throw Error("training sequence " + std::to_string(i) + " is not labeled");
    if (!train[i].labels.empty()) order.push_back(i);
  }
  if (order.empty()) throw Error("no labeled training tokens");

  AdamW<Scalar> adam(opt, 6);
  SplitMix64 rng(mix_seed(opt.seed, 0x5441474745ULL));
  double lr = opt.learning_rate;
  double best_valid = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  TaggerModel<Scalar> best = model;
  TaggerTrainLog log;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t tokens = 0, correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      const auto batch = detail::stack_sequences(train, std::span<const std::size_t>(order).subspan(start, stop - start));
      TaggerGradients<Scalar> g;
      const double loss = static_cast<double>(tagger_loss(model, batch.z, batch.h, batch.labels, &g, &correct));
      if (!std::isfinite(loss))
        throw TrainingError("non-finite tagger loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(batch.labels.size());
      tokens += batch.labels.size();
      if (model.use_graph) {
        adam.update(0, model.graph_proj, g.graph_proj, lr);
        adam.update(1, model.graph_bias, g.graph_bias, lr);
      }
      adam.update(2, model.ctx_proj, g.ctx_proj, lr);
      adam.update(3, model.ctx_bias, g.ctx_bias, lr);
      adam.update(4, model.classifier, g.classifier, lr);
      adam.update(5, model.class_bias, g.class_bias, lr);
      adam.next_step();
    }

    TaggerEpochLog entry;
    entry.epoch = epoch;
    entry.learning_rate = lr;
    entry.train_loss = loss_sum / static_cast<double>(tokens);
    entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(tokens);
    entry.valid_loss = valid.empty() ? detail::mean_token_loss<Scalar>(model, train)
                                     : detail::mean_token_loss<Scalar>(model, valid);
    if (!std::isfinite(entry.valid_loss))
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    log.epochs.push_back(entry);

    if (entry.valid_loss < best_valid) {
      best_valid = entry.valid_loss;
      best = model;
      log.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= opt.patience) {
      lr *= opt.anneal;
      bad_epochs = 0;
    }
  }
  return {std::move(best), std::move(log)};
}

// "TAG1" | u32 n_dims (4) | u32 d_g, d_c, p, 3 | P_g, b_g, P_c, b_c, C, b_C as
// row-major little-endian float32.
template <typename Scalar>
void save_tagger(std::ostream& out, const TaggerModel<Scalar>& m) {
  io::write_magic(out, "TAG1");
  io::write_u32(out, 4);
  for (auto d : {m.graph_dim(), m.context_dim(), m.projection_dim(), Eigen::Index{kNumTags}})
    io::write_u32(out, static_cast<std::uint32_t>(d));
  io::write_matrix_f32(out, m.graph_proj);
  io::write_matrix_f32(out, m.graph_bias);
  io::write_matrix_f32(out, m.ctx_proj);
  io::write_matrix_f32(out, m.ctx_bias);
  io::write_matrix_f32(out, m.classifier);
  io::write_matrix_f32(out, m.class_bias);
}

template <typename Scalar = double>
TaggerModel<Scalar> load_tagger(std::istream& in) {
  constexpr std::string_view what = "tagger checkpoint";
  io::expect_magic(in, "TAG1", what);
  if (io::read_u32(in, what) != 4) throw LoadError("tagger checkpoint: expected 4 dims");
  const auto dg = io::read_u32(in, what), dc = io::read_u32(in, what), p = io::read_u32(in, what);
  if (io::read_u32(in, what) != kNumTags) throw LoadError("tagger checkpoint: output size must be 3");
  TaggerModel<Scalar> m;
  m.graph_proj = io::read_matrix_f32<Scalar>(in, p, dg, what);
  m.graph_bias = io::read_matrix_f32<Scalar>(in, p, 1, what);
  m.ctx_proj = io::read_matrix_f32<Scalar>(in, p, dc, what);
  m.ctx_bias = io::read_matrix_f32<Scalar>(in, p, 1, what);
  m.classifier = io::read_matrix_f32<Scalar>(in, kNumTags, 2 * p, what);
  m.class_bias = io::read_matrix_f32<Scalar>(in, kNumTags, 1, what);
  m.use_graph = !(m.graph_proj.isZero(0) && m.graph_bias.isZero(0));
  return m;
}

template <typename Scalar>
void save_tagger(const std::filesystem::path& path, const TaggerModel<Scalar>& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  save_tagger(out, m);
}

template <typename Scalar = double>
TaggerModel<Scalar> load_tagger(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  return load_tagger<Scalar>(in);
}

}  // namespace kpe
