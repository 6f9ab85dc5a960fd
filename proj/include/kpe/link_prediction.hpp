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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kpe/cooc_graph.hpp"
#include "kpe/error.hpp"
#include "kpe/gcn.hpp"
#include "kpe/random.hpp"

namespace kpe {

struct EdgeSample {
  NodeId n1;
  NodeId n2;
  bool label;
};

struct EdgeDataset {
  std::vector<EdgeSample> samples;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  // negatives / positives; below the requested ratio when the graph ran out
  // of non-edges.
  double achieved_ratio = 0.0;

  std::size_t size() const { return samples.size(); }
};

inline constexpr int kDefaultNegativeRatio = 5;

// Every edge as a positive, then ratio * |E| distinct non-edges drawn
// uniformly without replacement (all non-edges if there are fewer).
EdgeDataset make_edge_dataset(const CoocGraph& graph, int ratio, std::uint64_t seed);

// Mann-Whitney AUC: P(score of random positive > score of random negative),
// ties counting 1/2.
double auc_roc(std::span<const std::pair<double, bool>> scores);

inline constexpr double kLogitClamp = 30.0;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                        : std::exp(x) / (Scalar(1) + std::exp(x));
}

template <typename Derived>
typename Derived::Scalar edge_logit(const Eigen::MatrixBase<Derived>& z, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= z.rows() || j >= z.rows()) throw Error("node index out of range");
  return z.row(i).dot(z.row(j));
}

// E_p = Z Z^T as logits; apply sigmoid for probabilities.
template <typename Derived>
MatrixX<typename Derived::Scalar> edge_logit_matrix(const Eigen::MatrixBase<Derived>& z) {
  return z * z.transpose();
}

// Mean binary cross-entropy over the samples, logits clamped to +-30.
// When grad_z is non-null it receives dL/dZ (zero through clamped logits).
template <typename Scalar>
Scalar bce_loss(const MatrixX<Scalar>& z, std::span<const EdgeSample> samples,
                MatrixX<Scalar>* grad_z = nullptr) {
  if (samples.empty()) throw Error("binary cross-entropy over an empty edge dataset");
  if (grad_z) grad_z->setZero(z.rows(), z.cols());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(samples.size());
  const Scalar clamp(kLogitClamp);
  Scalar total(0);
  for (const auto& s : samples) {
    const Scalar raw = edge_logit(z, s.n1, s.n2);
    const Scalar logit = std::clamp(raw, -clamp, clamp);
    // -log sigma(x) = softplus(-x), -log(1 - sigma(x)) = softplus(x)
    const Scalar x = s.label ? -logit : logit;
    total += x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    if (grad_z && raw > -clamp && raw < clamp) {
      const Scalar g = (sigmoid(logit) - (s.label ? Scalar(1) : Scalar(0))) * inv_n;
      grad_z->row(s.n1) += g * z.row(s.n2);
      grad_z->row(s.n2) += g * z.row(s.n1);
    }
  }
  return total * inv_n;
}

template <typename Scalar>
Scalar bce_loss(const MatrixX<Scalar>& z, const EdgeDataset& data, MatrixX<Scalar>* grad_z = nullptr) {
  return bce_loss<Scalar>(z, std::span<const EdgeSample>(data.samples), grad_z);
}

struct GcnTrainOptions {
  int epochs = 5;
  double learning_rate = 0.05;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct GcnEpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
  std::optional<double> heldout_auc;
};

struct GcnTrainLog {
  std::vector<GcnEpochLog> epochs;
  int best_epoch = 0;
  std::size_t train_samples = 0;
  std::size_t heldout_samples = 0;
};

nlohmann::json to_json(const GcnTrainLog& log);

// Stratified split: about `fraction` of the positives and of the negatives
// (at least one of each when the class has two or more members) go to the
// held-out part.
std::pair<std::vector<EdgeSample>, std::vector<EdgeSample>> split_edge_dataset(const EdgeDataset& data,
                                                                               double fraction,
                                                                               std::uint64_t seed);

namespace detail {

template <typename Scalar>
std::optional<double> heldout_auc(const MatrixX<Scalar>& z, std::span<const EdgeSample> samples) {
  std::vector<std::pair<double, bool>> scores;
  bool pos = false, neg = false;
  for (const auto& s : samples) {
    scores.emplace_back(static_cast<double>(edge_logit(z, s.n1, s.n2)), s.label);
    (s.label ? pos : neg) = true;
  }
  if (!pos || !neg) return std::nullopt;
  return auc_roc(scores);
}

}  // namespace detail

// Full-batch gradient descent on the edge BCE. After each epoch's update the
// held-out AUC is measured; the parameters after the best epoch are returned
// (highest AUC, or lowest held-out loss when AUC is undefined).
template <typename Scalar>
std::pair<GcnModel<Scalar>, GcnTrainLog> train_gcn(GcnModel<Scalar> model, const CoocGraph& graph,
                                                   const EdgeDataset& data, const GcnTrainOptions& opt) {
  if (opt.epochs < 1) throw Error("GCN training needs at least one epoch");
  auto [train, heldout] = split_edge_dataset(data, opt.holdout_fraction, opt.seed);
  if (train.empty()) throw TrainingError("GCN training set is empty");

  GcnTrainLog log;
  log.train_samples = train.size();
  log.heldout_samples = heldout.size();
  GcnModel<Scalar> best = model;
  double best_auc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  const auto lr = static_cast<Scalar>(opt.learning_rate);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    auto tape = forward_with_tape(model, graph);
    MatrixX<Scalar> grad_z;
    const Scalar loss = bce_loss<Scalar>(tape.z, train, &grad_z);
    if (!std::isfinite(static_cast<double>(loss)))
      throw TrainingError("non-finite GCN loss at epoch " + std::to_string(epoch));
    const auto grads = backward(model, tape, grad_z);
    model.embed_table -= lr * grads.embed_table;
    for (std::size_t k = 0; k < model.weights.size(); ++k) model.weights[k] -= lr * grads.weights[k];

    GcnEpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = static_cast<double>(loss);
    const auto z = forward(model, graph);
    const auto& eval_set = heldout.empty() ? train : heldout;
    entry.heldout_loss = static_cast<double>(bce_loss<Scalar>(z, eval_set));
    entry.heldout_auc = detail::heldout_auc<Scalar>(z, eval_set);

    const bool better = entry.heldout_auc ? *entry.heldout_auc > best_auc
                                          : (best_auc < 0.0 && entry.heldout_loss < best_loss);
    if (better || epoch == 1) {
      best = model;
      log.best_epoch = epoch;
      if (entry.heldout_auc) best_auc = *entry.heldout_auc;
      best_loss = entry.heldout_loss;
    }
    log.epochs.push_back(entry);
  }
  return {std::move(best), std::move(log)};
}

}  // namespace kpe
