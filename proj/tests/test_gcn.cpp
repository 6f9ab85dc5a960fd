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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "kpe/gcn.hpp"
#include "oracles.hpp"

using namespace kpe;
using Eigen::MatrixXd;

namespace {

CoocGraph path_abc() { return CoocGraph({"a", "b", "c"}, {{{0, 1}, 1}, {{1, 2}, 1}}); }

GcnModel<double> fixture_model(const MatrixXd& w) {
  GcnModel<double> m;
  m.embed_table.resize(3, 2);
  m.embed_table << 1, 2, 3, -1, 0, 4;
  m.weights = {w};
  m.activation = Activation::kIdentity;
  return m;
}

}  // namespace

TEST_CASE("init_model determinism and preconditions") {
  const std::vector<int> dims{192, 192, 192};
  auto a = init_model(3, dims, 7), b = init_model(3, dims, 7), c = init_model(3, dims, 8);
  CHECK(a.embed_table == b.embed_table);
  CHECK(a.weights[1] == b.weights[1]);
  CHECK(a.embed_table != c.embed_table);
  CHECK(a.weights[0].rows() == 192);
  CHECK(a.weights[0].cols() == 384);
  const double bound = std::sqrt(6.0 / (384 + 192));
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= bound);
  CHECK_THROWS(init_model(3, std::vector<int>{}, 7));
  CHECK_THROWS(init_model(0, dims, 7));
}

TEST_CASE("vocabulary-keyed init gives a word the same start in every graph") {
  const std::vector<int> dims{8, 8};
  std::vector<std::string> v1{"graph", "net"}, v2{"tree", "other", "graph"};
  auto m1 = init_model_for_vocab(std::span<const std::string>(v1), dims, 3);
  auto m2 = init_model_for_vocab(std::span<const std::string>(v2), dims, 3);
  CHECK(m1.embed_table.row(0) == m2.embed_table.row(2));
  CHECK(m1.weights[0] == m2.weights[0]);
  CHECK(m1.embed_table.row(1) != m2.embed_table.row(1));
}

TEST_CASE("path graph fixture") {
  // W = [0 | I]: the output is the neighborhood mean itself.
  MatrixXd sel(2, 4);
  sel << 0, 0, 1, 0, 0, 0, 0, 1;
  auto tape = forward_with_tape(fixture_model(sel), path_abc());
  // b's neighbors a=(1,2), c=(0,4): mean (0.5, 3).
  CHECK(tape.layers[0].pre(1, 0) == doctest::Approx(0.5));
  CHECK(tape.layers[0].pre(1, 1) == doctest::Approx(3.0));
  CHECK(tape.z(1, 0) == doctest::Approx(0.5 / std::sqrt(9.25)));
  CHECK(tape.z(1, 1) == doctest::Approx(3.0 / std::sqrt(9.25)));
  // a has the single neighbor b.
  CHECK(tape.layers[0].pre(0, 0) == doctest::Approx(3.0));
  CHECK(tape.layers[0].pre(0, 1) == doctest::Approx(-1.0));

  MatrixXd both(2, 4);
  both << 1, 0, 1, 0, 0, 1, 0, 1;
  auto t2 = forward_with_tape(fixture_model(both), path_abc());
  CHECK(t2.layers[0].pre(1, 0) == doctest::Approx(3.5));
  CHECK(t2.layers[0].pre(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("doubling edge weights doubles the neighborhood message") {
  std::mt19937 rng(5);
  auto g = testing::random_graph(rng, 6, 0.6);
  std::map<std::pair<NodeId, NodeId>, std::int64_t> doubled;
  for (const auto& [k, w] : g.edges()) doubled[k] = 2 * w;
  CoocGraph g2(g.vocab(), doubled);
  const std::vector<int> dims{4, 3};
  auto m = init_model(6, dims, 1);
  auto t1 = forward_with_tape(m, g), t2 = forward_with_tape(m, g2);
  CHECK(t2.layers[0].message == 2.0 * t1.layers[0].message);
}

TEST_CASE("isolated node gets a zero message") {
  CoocGraph g({"a", "b", "lonely"}, {{{0, 1}, 2}});
  const std::vector<int> dims{4, 4, 4};
  auto m = init_model(3, dims, 2);
  auto tape = forward_with_tape(m, g);
  for (const auto& layer : tape.layers) CHECK(layer.message.row(2).isZero(0));
  const double norm = tape.z.row(2).norm();
  CHECK((norm == 0.0 || std::abs(norm - 1.0 / std::sqrt(2.0)) < 1e-12));
}

TEST_CASE("matches the naive loop implementation and the norm invariant") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 8);
    auto g = testing::random_graph(rng, n, 0.5);
    const int depth = 1 + static_cast<int>(rng() % 3);
    std::vector<int> dims(depth + 1, 6);
    auto m = init_model(n, dims, trial);
    const MatrixXd z = forward(m, g);
    const MatrixXd expected = oracle::naive_gcn(testing::naive_of(g), m.embed_table, m.weights, true);
    CHECK((z - expected).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index v = 0; v < z.rows(); ++v) {
      const double norm = z.row(v).norm();
      if (norm > 0) CHECK(std::abs(norm - 1.0 / std::sqrt(double(depth))) < 1e-6);
    }
    CHECK(forward(m, g) == z);
  }
}

TEST_CASE("relabeling nodes permutes the output rows") {
  std::mt19937 rng(3);
  auto g = testing::random_graph(rng, 6, 0.5);
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // old index i -> new index perm[i]
  std::vector<std::string> vocab(6);
  for (int i = 0; i < 6; ++i) vocab[perm[i]] = g.vocab()[i];
  std::map<std::pair<NodeId, NodeId>, std::int64_t> edges;
  for (const auto& [k, w] : g.edges()) {
    auto a = perm[k.first], b = perm[k.second];
    edges[{std::min(a, b), std::max(a, b)}] = w;
  }
  CoocGraph gp(vocab, edges);
  const std::vector<int> dims{5, 4, 3};
  auto m = init_model(6, dims, 9);
  auto mp = m;
  for (int i = 0; i < 6; ++i) mp.embed_table.row(perm[i]) = m.embed_table.row(i);
  const MatrixXd z = forward(m, g), zp = forward(mp, gp);
  for (int i = 0; i < 6; ++i) CHECK((z.row(i) - zp.row(perm[i])).norm() < 1e-12);
}

TEST_CASE("shape errors") {
  const std::vector<int> dims{4, 4};
  auto m = init_model(3, dims, 0);
  CHECK_THROWS_AS(forward(m, CoocGraph({"a", "b"}, {{{0, 1}, 1}})), ShapeError);
  m.weights[0].resize(4, 6);
  CHECK_THROWS_AS(forward(m, path_abc()), ShapeError);
}

TEST_CASE("backward matches finite differences") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = testing::random_graph(rng, 5, 0.6);
    const std::vector<int> dims{4, 5, 3};
    auto m = init_model(5, dims, 100 + trial);
    // Half the squared norm is constant under the row normalization, so a
    // random target keeps the loss informative.
    const MatrixXd target = MatrixXd::Random(5, 3);
    auto loss = [&] { return 0.5 * (forward(m, g) - target).squaredNorm(); };
    auto tape = forward_with_tape(m, g);
    const auto grads = backward(m, tape, MatrixXd(tape.z - target));
    CHECK(oracle::max_relative_error(grads.embed_table, oracle::numeric_gradient(m.embed_table, loss)) < 1e-4);
    for (std::size_t k = 0; k < m.weights.size(); ++k)
      CHECK(oracle::max_relative_error(grads.weights[k], oracle::numeric_gradient(m.weights[k], loss)) < 1e-4);

    const auto flat = backward(m, tape, tape.z);
    CHECK(flat.embed_table.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  const std::vector<int> dims{3, 3};
  auto m = init_model(3, dims, 4);
  auto tape = forward_with_tape(m, path_abc());
  const auto grads = backward(m, tape, MatrixXd(MatrixXd::Zero(3, 3)));
  CHECK(grads.embed_table.isZero(0));
  CHECK(grads.weights[0].isZero(0));
  CHECK_THROWS_AS(backward(m, tape, MatrixXd(MatrixXd::Zero(2, 3))), ShapeError);
}

TEST_CASE("checkpoint round-trip at float precision") {
  const std::vector<int> dims{6, 5, 4};
  auto m = init_model(7, dims, 12);
  std::stringstream buf;
  save_gcn(buf, m);
  CHECK(buf.str().substr(0, 4) == "GCN1");
  CHECK(buf.str().size() == 4 + 4 * 5 + 4 * (7 * 6 + 5 * 12 + 4 * 10));
  auto back = load_gcn(buf);
  CHECK(back.dims() == m.dims());
  CHECK((back.embed_table - m.embed_table).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(back.weights[1] == m.weights[1].cast<float>().cast<double>());

  std::stringstream truncated(buf.str().substr(0, 30));
  CHECK_THROWS_AS(load_gcn(truncated), LoadError);
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(load_gcn(bad), LoadError);
}
