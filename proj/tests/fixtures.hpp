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

// Random instances shared by unit tests and the acceptance binary.

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kpe/cooc_graph.hpp"
#include "oracles.hpp"

namespace kpe::testing {

inline CoocGraph random_graph(std::mt19937& rng, int n, double density, int max_weight = 3) {
  std::vector<std::string> vocab;
  for (int i = 0; i < n; ++i) vocab.push_back("w" + std::to_string(i));
  std::map<std::pair<NodeId, NodeId>, std::int64_t> edges;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u(rng) < density) edges[{a, b}] = 1 + static_cast<std::int64_t>(rng() % max_weight);
  return CoocGraph(vocab, edges);
}

inline oracle::NaiveGraph naive_of(const CoocGraph& g) {
  oracle::NaiveGraph out{static_cast<int>(g.num_nodes()), {}};
  out.nbrs.resize(g.num_nodes());
  for (const auto& [key, w] : g.edges()) {
    out.nbrs[key.first].emplace_back(key.second, static_cast<double>(w));
    out.nbrs[key.second].emplace_back(key.first, static_cast<double>(w));
  }
  return out;
}

// Two cliques of `size` nodes joined by a single bridge edge.
inline CoocGraph two_cliques(int size) {
  std::vector<std::string> vocab;
  for (int i = 0; i < 2 * size; ++i) vocab.push_back("n" + std::to_string(i));
  std::map<std::pair<NodeId, NodeId>, std::int64_t> edges;
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < size; ++a)
      for (int b = a + 1; b < size; ++b) edges[{c * size + a, c * size + b}] = 1;
  edges[{size - 1, size}] = 1;
  return CoocGraph(vocab, edges);
}

}  // namespace kpe::testing
