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

#include "kpe/cooc_graph.hpp"

#include <algorithm>

#include "kpe/error.hpp"
#include "kpe/text.hpp"

namespace kpe {

CoocGraph::CoocGraph(std::vector<std::string> vocab, std::map<EdgeKey, std::int64_t> edges)
    : vocab_(std::move(vocab)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<NodeId>(i)).second)
      throw Error("duplicate vocabulary entry '" + vocab_[i] + "'");
  }
  adjacency_.resize(vocab_.size());
  const auto n = static_cast<NodeId>(vocab_.size());
  for (const auto& [key, w] : edges_) {
    const auto [u, v] = key;
    if (u < 0 || v < 0 || u >= n || v >= n) throw Error("edge endpoint out of range");
    if (u >= v) throw Error("edge keys must satisfy u < v (no self-loops)");
    if (w < 1) throw Error("edge weights must be >= 1");
    adjacency_[u].push_back({v, static_cast<double>(w)});
    adjacency_[v].push_back({u, static_cast<double>(w)});
  }
  for (auto& row : adjacency_)
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
}

std::optional<NodeId> CoocGraph::find(const std::string& form) const {
  auto it = index_.find(form);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId CoocGraph::node_of(const std::string& token) const {
  auto id = find(normalize_token_for_node(token));
  if (!id) throw Error("token '" + token + "' has no graph node");
  return *id;
}

std::int64_t CoocGraph::weight(NodeId u, NodeId v) const {
  if (u == v) return 0;
  auto it = edges_.find(u < v ? EdgeKey{u, v} : EdgeKey{v, u});
  return it == edges_.end() ? 0 : it->second;
}

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(int window) : window_(window) {
    if (window < 2) throw Error("co-occurrence window must be >= 2");
  }

  void add(std::span<const std::string> tokens) {
    std::vector<NodeId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto form = normalize_token_for_node(t);
      auto [it, fresh] = index_.emplace(form, static_cast<NodeId>(vocab_.size()));
      if (fresh) vocab_.push_back(std::move(form));
      ids.push_back(it->second);
    }
    const std::size_t n = ids.size();
    const std::size_t w = static_cast<std::size_t>(window_);
    const std::size_t last_start = n > w ? n - w : 0;
    std::vector<NodeId> types;
    for (std::size_t p = 0; p <= last_start && p < n; ++p) {
      types.assign(ids.begin() + p, ids.begin() + std::min(n, p + w));
      std::sort(types.begin(), types.end());
      types.erase(std::unique(types.begin(), types.end()), types.end());
      for (std::size_t a = 0; a < types.size(); ++a)
        for (std::size_t b = a + 1; b < types.size(); ++b) ++edges_[{types[a], types[b]}];
    }
  }

  CoocGraph finish() && { return CoocGraph(std::move(vocab_), std::move(edges_)); }

 private:
  int window_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, NodeId> index_;
  std::map<CoocGraph::EdgeKey, std::int64_t> edges_;
};

}  // namespace

CoocGraph build_graph(std::span<const std::string> tokens, int window) {
  if (tokens.empty()) throw Error("cannot build a co-occurrence graph from an empty token list");
  GraphBuilder b(window);
  b.add(tokens);
  return std::move(b).finish();
}

CoocGraph build_corpus_graph(std::span<const std::vector<std::string>> sequences, int window) {
  GraphBuilder b(window);
  bool any = false;
  for (const auto& s : sequences) {
    if (s.empty()) continue;
    any = true;
    b.add(s);
  }
  if (!any) throw Error("cannot build a co-occurrence graph from an empty token list");
  return std::move(b).finish();
}

nlohmann::json graph_to_json(const CoocGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, w] : g.edges()) edges.push_back({key.first, key.second, w});
  return {{"vocab", g.vocab()}, {"edges", std::move(edges)}};
}

CoocGraph graph_from_json(const nlohmann::json& j) {
  std::map<CoocGraph::EdgeKey, std::int64_t> edges;
  for (const auto& e : j.at("edges")) {
    NodeId u = e.at(0).get<NodeId>(), v = e.at(1).get<NodeId>();
    if (u > v) std::swap(u, v);
    edges[{u, v}] = e.at(2).get<std::int64_t>();
  }
  return CoocGraph(j.at("vocab").get<std::vector<std::string>>(), std::move(edges));
}

}  // namespace kpe
