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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kpe {

using NodeId = std::int32_t;

struct WeightedNeighbor {
  NodeId node;
  double weight;
};

// Word co-occurrence graph of one document (or of a set of documents).
// Vertices are lowercased token types numbered in order of first appearance;
// edges are undirected, self-loop free, and carry positive integer weights.
class CoocGraph {
 public:
  using EdgeKey = std::pair<NodeId, NodeId>;  // first < second

  CoocGraph() = default;
  // Validates: unique vocab entries, u != v, indices in range, weights >= 1.
  CoocGraph(std::vector<std::string> vocab, std::map<EdgeKey, std::int64_t> edges);

  std::size_t num_nodes() const { return vocab_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::map<EdgeKey, std::int64_t>& edges() const { return edges_; }

  std::optional<NodeId> find(const std::string& form) const;
  // Looks up the node of a raw token (lowercases first); throws if absent.
  NodeId node_of(const std::string& token) const;

  // 0 for non-adjacent pairs and for u == v.
  std::int64_t weight(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const { return weight(u, v) > 0; }

  // Neighbor lists sorted by node id.
  const std::vector<std::vector<WeightedNeighbor>>& adjacency() const { return adjacency_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, NodeId> index_;
  std::map<EdgeKey, std::int64_t> edges_;
  std::vector<std::vector<WeightedNeighbor>> adjacency_;
};

inline constexpr int kDefaultWindow = 4;

// Windows of `window` consecutive tokens start at every position 0..n-window;
// a sequence shorter than the window is a single window. Each unordered pair
// of distinct types present in a window adds 1 to that pair's weight.
CoocGraph build_graph(std::span<const std::string> tokens, int window = kDefaultWindow);

// One graph over several token sequences; windows never cross sequence
// boundaries.
CoocGraph build_corpus_graph(std::span<const std::vector<std::string>> sequences,
                             int window = kDefaultWindow);

// {"vocab": [...], "edges": [[u, v, weight], ...]}
nlohmann::json graph_to_json(const CoocGraph& g);
CoocGraph graph_from_json(const nlohmann::json& j);

}  // namespace kpe
