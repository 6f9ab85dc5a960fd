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

#include <random>
#include <sstream>

#include "kpe/tagger.hpp"
#include "oracles.hpp"

using namespace kpe;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

TaggerModel<double> fixture_tagger() {
  TaggerModel<double> m;
  m.graph_proj = MatrixXd::Identity(2, 2);
  m.graph_bias = VectorXd::Zero(2);
  m.ctx_proj = MatrixXd{{1, 0}, {0, -1}};
  m.ctx_bias = VectorXd::Zero(2);
  m.classifier = MatrixXd{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}};
  m.class_bias = VectorXd::Zero(3);
  return m;
}

// Planted corpus: tokens whose context vector has a positive first coordinate
// are keyphrase tokens (B when the previous token is not one, else I).
std::vector<TaggedSequence<double>> planted_sequences(int count, std::uint64_t seed, int dg, int dc) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<TaggedSequence<double>> out;
  for (int s = 0; s < count; ++s) {
    const int n = 8 + static_cast<int>(rng() % 8);
    TaggedSequence<double> seq{MatrixXd(n, dg), MatrixXd(n, dc), {}};
    bool prev = false;
    for (int t = 0; t < n; ++t) {
      const bool key = rng() % 3 == 0;
      for (int c = 0; c < dg; ++c) seq.z(t, c) = noise(rng);
      for (int c = 0; c < dc; ++c) seq.h(t, c) = 0.3 * noise(rng);
      seq.h(t, 0) = key ? 1.0 : -1.0;
      seq.h(t, 1) = key && !prev ? 1.0 : -1.0;
      seq.labels.push_back(!key ? Tag::O : prev ? Tag::I : Tag::B);
      prev = key;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

TEST_CASE("uniform output from zero maps") {
  TaggerModel<double> m = init_tagger(4, 5, 3, 1);
  m.graph_proj.setZero();
  m.ctx_proj.setZero();
  m.classifier.setZero();
  const auto pred = tag_forward(m, MatrixXd::Zero(6, 4), MatrixXd::Zero(6, 5));
  CHECK(pred.size() == 6);
  CHECK((pred.probs.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("bias saturates a single token") {
  TaggerModel<double> m = init_tagger(2, 2, 2, 1);
  m.classifier.setZero();
  m.class_bias(0) = 10.0;
  const auto pred = tag_forward(m, MatrixXd::Ones(1, 2), MatrixXd::Ones(1, 2));
  CHECK(pred.probs(0, 0) > 0.9999);
  CHECK(pred.labels[0] == Tag::B);
}

TEST_CASE("two-token fixture") {
  const MatrixXd z{{1, 2}, {-1, 0.5}};
  const MatrixXd h{{0.5, -1}, {2, 3}};
  const auto pred = tag_forward(fixture_tagger(), z, h);
  const MatrixXd expected{{0.186323723225848, 0.506480391055654, 0.307195885718498},
                          {0.099623648062318, 0.164251627625088, 0.736124724312594}};
  CHECK((pred.probs - expected).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(pred.labels == std::vector<Tag>{Tag::I, Tag::O});
}

TEST_CASE("softmax rows") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  MatrixXd logits(20, 3);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = u(rng);
  const MatrixXd p = softmax_rows(logits);
  for (int r = 0; r < 20; ++r) {
    CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-6);
    CHECK(p.row(r).minCoeff() >= 0.0);
  }
  const MatrixXd shifted = softmax_rows<double>((logits.array() + 123.0).matrix());
  CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(softmax_rows<double>(MatrixXd{{1000, 0, -1000}}).allFinite());
}

TEST_CASE("shape errors") {
  auto m = init_tagger(3, 4, 2, 0);
  CHECK_THROWS_AS(tag_forward(m, MatrixXd::Zero(2, 3), MatrixXd::Zero(3, 4)), ShapeError);
  CHECK_THROWS_AS(tag_forward(m, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 4)), ShapeError);
  std::vector<Tag> one{Tag::O};
  CHECK_THROWS_AS(tagger_loss(m, MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 4), std::span<const Tag>(one)),
                  ShapeError);
}

TEST_CASE("gradients through both branches") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = init_tagger(6, 8, 5, 40 + trial);
    m.graph_bias = VectorXd::Random(5) * 0.1;
    m.ctx_bias = VectorXd::Random(5) * 0.1;
    m.class_bias = VectorXd::Random(3) * 0.1;
    const int n = 1 + trial % 3;
    const MatrixXd z = MatrixXd::Random(n, 6), h = MatrixXd::Random(n, 8);
    std::vector<Tag> labels;
    for (int t = 0; t < n; ++t) labels.push_back(static_cast<Tag>(rng() % 3));
    CHECK(gradcheck_tagger(m, z, h, std::span<const Tag>(labels)) < 1e-4);

    // Independent check of P_g through the numeric oracle.
    TaggerGradients<double> g;
    tagger_loss(m, z, h, std::span<const Tag>(labels), &g);
    auto loss = [&] { return tagger_loss(m, z, h, std::span<const Tag>(labels)); };
    CHECK(oracle::max_relative_error(g.graph_proj, oracle::numeric_gradient(m.graph_proj, loss)) < 1e-4);
    CHECK(oracle::max_relative_error(g.ctx_proj, oracle::numeric_gradient(m.ctx_proj, loss)) < 1e-4);
  }
}

TEST_CASE("zero classifier blocks the projection gradients") {
  auto m = init_tagger(3, 3, 4, 2);
  m.classifier.setZero();
  std::vector<Tag> labels{Tag::B, Tag::O};
  TaggerGradients<double> g;
  tagger_loss(m, MatrixXd::Random(2, 3), MatrixXd::Random(2, 3), std::span<const Tag>(labels), &g);
  CHECK(g.graph_proj.isZero(0));
  CHECK(g.ctx_proj.isZero(0));
  CHECK_FALSE(g.classifier.isZero(0));
}

TEST_CASE("ablation ignores the graph input") {
  auto m = init_tagger(4, 3, 5, 9, /*use_graph=*/false);
  CHECK(m.graph_proj.isZero(0));
  const MatrixXd h = MatrixXd::Random(4, 3);
  const auto a = tag_forward(m, MatrixXd::Random(4, 4), h);
  const auto b = tag_forward(m, MatrixXd::Zero(4, 4), h);
  CHECK(a.probs == b.probs);
  std::vector<Tag> labels{Tag::B, Tag::I, Tag::O, Tag::O};
  TaggerGradients<double> g;
  tagger_loss(m, MatrixXd::Random(4, 4), h, std::span<const Tag>(labels), &g);
  CHECK(g.graph_proj.isZero(0));
}

TEST_CASE("chunking") {
  CHECK(chunk_sequence(5, 512) == std::vector<Span>{{0, 5}});
  CHECK(chunk_sequence(1024, 512) == std::vector<Span>{{0, 512}, {512, 1024}});
  CHECK(chunk_sequence(1025, 512) == std::vector<Span>{{0, 512}, {512, 1024}, {1024, 1025}});
  CHECK(chunk_sequence(0, 3).empty());
  CHECK_THROWS(chunk_sequence(4, 0));
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng() % 2000, limit = 1 + rng() % 600;
    const auto spans = chunk_sequence(n, limit);
    std::size_t next = 0;
    for (const auto& s : spans) {
      CHECK(s.begin == next);
      CHECK(s.end > s.begin);
      CHECK(s.end - s.begin <= limit);
      next = s.end;
    }
    CHECK(next == n);
  }
}

TEST_CASE("training: zero step keeps parameters") {
  auto train = planted_sequences(6, 1, 3, 4);
  auto m = init_tagger(3, 4, 4, 1);
  TaggerTrainOptions opt{.batch_size = 2, .epochs = 3, .learning_rate = 0.0, .seed = 1};
  auto [out, log] = train_tagger(m, std::span<const TaggedSequence<double>>(train),
                                 std::span<const TaggedSequence<double>>(), opt);
  CHECK(out.ctx_proj == m.ctx_proj);
  CHECK(out.classifier == m.classifier);
  CHECK(log.epochs[0].valid_loss == log.epochs[2].valid_loss);
}

TEST_CASE("training learns a planted signal and is deterministic") {
  auto train = planted_sequences(40, 2, 3, 6);
  auto valid = planted_sequences(10, 3, 3, 6);
  auto m = init_tagger(3, 6, 8, 4);
  TaggerTrainOptions opt{.batch_size = 10, .epochs = 100, .learning_rate = 1e-2, .seed = 4};
  auto run = [&] {
    return train_tagger(m, std::span<const TaggedSequence<double>>(train),
                        std::span<const TaggedSequence<double>>(valid), opt);
  };
  auto [model, log] = run();
  CHECK(log.epochs.size() == 100);
  double best_acc = 0;
  for (const auto& e : log.epochs) best_acc = std::max(best_acc, e.train_accuracy);
  CHECK(best_acc > 0.95);
  CHECK(log.epochs.back().train_loss < log.epochs.front().train_loss);
  auto [model2, log2] = run();
  CHECK(to_json(log) == to_json(log2));
  CHECK(model.classifier == model2.classifier);
}

TEST_CASE("annealing after patience bad epochs") {
  // A learning rate this large makes validation loss stall, so the schedule kicks in.
  auto train = planted_sequences(10, 5, 2, 3);
  auto m = init_tagger(2, 3, 3, 5);
  TaggerTrainOptions opt{.batch_size = 10, .epochs = 40, .learning_rate = 5.0, .patience = 2, .anneal = 0.5};
  auto [out, log] = train_tagger(m, std::span<const TaggedSequence<double>>(train),
                                 std::span<const TaggedSequence<double>>(), opt);
  int bad = 0;
  double best = std::numeric_limits<double>::infinity(), lr = opt.learning_rate;
  for (const auto& e : log.epochs) {
    CHECK(e.learning_rate == lr);
    if (e.valid_loss < best) {
      best = e.valid_loss;
      bad = 0;
    } else if (++bad >= opt.patience) {
      lr *= opt.anneal;
      bad = 0;
    }
  }
  CHECK(lr < opt.learning_rate);
  CHECK(log.epochs[log.best_epoch - 1].valid_loss == best);
}

TEST_CASE("training preconditions") {
  auto train = planted_sequences(2, 1, 2, 2);
  auto m = init_tagger(2, 2, 2, 0);
  TaggerTrainOptions opt;
  train[0].labels.clear();
  train[1].labels.pop_back();
  CHECK_THROWS(train_tagger(m, std::span<const TaggedSequence<double>>(train),
                            std::span<const TaggedSequence<double>>(), opt));
  opt.anneal = 0.0;
  CHECK_THROWS(train_tagger(m, std::span<const TaggedSequence<double>>(train),
                            std::span<const TaggedSequence<double>>(), opt));
}

TEST_CASE("checkpoint round-trip") {
  auto m = init_tagger(4, 6, 3, 8);
  m.class_bias << 0.5, -0.25, 1.0;
  std::stringstream buf;
  save_tagger(buf, m);
  auto back = load_tagger(buf);
  CHECK(back.use_graph);
  CHECK(back.ctx_proj.rows() == 3);
  CHECK(back.ctx_proj.cols() == 6);
  CHECK((back.classifier - m.classifier).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(back.class_bias == m.class_bias);

  auto ablated = init_tagger(4, 6, 3, 8, false);
  std::stringstream buf2;
  save_tagger(buf2, ablated);
  CHECK_FALSE(load_tagger(buf2).use_graph);
  std::stringstream bad("TAG1\x05");
  CHECK_THROWS_AS(load_tagger(bad), LoadError);
}
