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

#include "kpe/link_prediction.hpp"

#include <numeric>
#include <unordered_set>

namespace kpe {

EdgeDataset make_edge_dataset(const CoocGraph& graph, int ratio, std::uint64_t seed) {
  if (ratio < 1) throw Error("negative sampling ratio must be >= 1");
  if (graph.num_edges() == 0) throw Error("cannot build an edge dataset from a graph without edges");

  EdgeDataset data;
  for (const auto& [key, w] : graph.edges()) data.samples.push_back({key.first, key.second, true});
  data.positives = data.samples.size();

  const auto n = static_cast<std::uint64_t>(graph.num_nodes());
  const std::uint64_t total_non_edges = n * (n - 1) / 2 - graph.num_edges();
  const std::uint64_t wanted = static_cast<std::uint64_t>(ratio) * data.positives;
  SplitMix64 rng(seed);

  auto push_negative = [&](NodeId u, NodeId v) { data.samples.push_back({u, v, false}); };

  if (2 * wanted >= total_non_edges) {
    // Dense request: enumerate all non-edges, then keep a uniform subset.
    std::vector<std::pair<NodeId, NodeId>> pool;
    pool.reserve(total_non_edges);
    for (NodeId u = 0; u < static_cast<NodeId>(n); ++u)
      for (NodeId v = u + 1; v < static_cast<NodeId>(n); ++v)
        if (!graph.has_edge(u, v)) pool.emplace_back(u, v);
    if (wanted < pool.size()) {
      for (std::size_t i = 0; i < wanted; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
      }
      pool.resize(wanted);
    }
    for (auto [u, v] : pool) push_negative(u, v);
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (seen.size() < wanted) {
      auto u = static_cast<NodeId>(rng.below(n));
      auto v = static_cast<NodeId>(rng.below(n));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (graph.has_edge(u, v)) continue;
      const std::uint64_t key = static_cast<std::uint64_t>(u) * n + static_cast<std::uint64_t>(v);
      if (seen.insert(key).second) push_negative(u, v);
    }
  }
  data.negatives = data.samples.size() - data.positives;
  data.achieved_ratio = static_cast<double>(data.negatives) / static_cast<double>(data.positives);
  return data;
}

double auc_roc(std::span<const std::pair<double, bool>> scores) {
  std::size_t pos = 0;
  for (const auto& s : scores) pos += s.second ? 1 : 0;
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw Error("AUC-ROC needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].first < scores[b].first; });

  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]].first == scores[order[i]].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (scores[order[k]].second) rank_sum += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::pair<std::vector<EdgeSample>, std::vector<EdgeSample>> split_edge_dataset(const EdgeDataset& data,
                                                                               double fraction,
                                                                               std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    (data.samples[i].label ? pos : neg).push_back(i);

  SplitMix64 rng(mix_seed(seed, 0x53504c4954ULL));
  std::vector<bool> held(data.samples.size(), false);
  for (auto* group : {&pos, &neg}) {
    if (group->size() < 2 || fraction <= 0.0) continue;
    shuffle(*group, rng);
    auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group->size())));
    count = std::clamp<std::size_t>(count, 1, group->size() - 1);
    for (std::size_t i = 0; i < count; ++i) held[(*group)[i]] = true;
  }
  std::vector<EdgeSample> train, heldout;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    (held[i] ? heldout : train).push_back(data.samples[i]);
  return {std::move(train), std::move(heldout)};
}

nlohmann::json to_json(const GcnTrainLog& log) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"heldout_loss", e.heldout_loss},
                      {"heldout_auc", e.heldout_auc ? nlohmann::json(*e.heldout_auc) : nlohmann::json()}});
  }
  return {{"epochs", std::move(epochs)},
          {"best_epoch", log.best_epoch},
          {"train_samples", log.train_samples},
          {"heldout_samples", log.heldout_samples}};
}

}  // namespace kpe
