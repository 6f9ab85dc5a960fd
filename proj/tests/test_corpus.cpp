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
#include <set>

#include "kpe/corpus.hpp"
#include "kpe/decode.hpp"
#include "kpe/error.hpp"
#include "kpe/text.hpp"

using namespace kpe;
using T = Tag;

TEST_CASE("minimal record loads") {
  auto split = parse_corpus(R"({"id":"a","tokens":["x"],"keyphrases":[]})", SplitName::kTrain);
  REQUIRE(split.documents.size() == 1);
  CHECK(split.documents[0].tokens.size() == 1);
  CHECK(split.name == SplitName::kTrain);
  CHECK(split.documents[0].labels == std::vector<Tag>{T::O});
}

TEST_CASE("keyphrases produce BIO labels") {
  auto split = parse_corpus(R"({"id":"a","tokens":["graph","neural","nets"],"keyphrases":["graph neural"]})",
                            SplitName::kTest);
  CHECK(*split.documents[0].labels == std::vector<Tag>{T::B, T::I, T::O});
}

TEST_CASE("supplied tags are kept verbatim") {
  auto split = parse_corpus(R"({"id":"a","tokens":["p","q","r"],"keyphrases":["r"],"tags":["B","I","O"]})",
                            SplitName::kTest);
  CHECK(*split.documents[0].labels == std::vector<Tag>{T::B, T::I, T::O});
}

TEST_CASE("raw text is tokenized") {
  auto split = parse_corpus(R"({"id":"t","text":"Graph nets, revisited."})", SplitName::kTest);
  CHECK(split.documents[0].tokens == std::vector<std::string>{"Graph", "nets", ",", "revisited", "."});
  CHECK_FALSE(split.documents[0].labels.has_value());
}

TEST_CASE("load errors name the line") {
  CHECK_THROWS_WITH_AS(parse_corpus("{\"id\":\"a\",\"tokens\":[\"x\"]}\n{oops", SplitName::kTest, "c.jsonl"),
                       doctest::Contains("c.jsonl:2"), LoadError);
  CHECK_THROWS_AS(parse_corpus("", SplitName::kTest), LoadError);
  CHECK_THROWS_AS(parse_corpus("\n\n", SplitName::kTest), LoadError);
  CHECK_THROWS_WITH(parse_corpus(R"({"id":"a","tokens":["x","y"],"tags":["O"]})", SplitName::kTest),
                    doctest::Contains(":1"));
  CHECK_THROWS_WITH(parse_corpus(R"({"id":"a","tokens":["x"],"tags":["I"]})", SplitName::kTest),
                    doctest::Contains("I without"));
  CHECK_THROWS_WITH(parse_corpus("{\"id\":\"a\",\"tokens\":[\"x\"]}\n{\"id\":\"a\",\"tokens\":[\"y\"]}",
                                 SplitName::kTest),
                    doctest::Contains("duplicate"));
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), LoadError);
}

TEST_CASE("derive_bio_labels") {
  auto label = [](std::vector<std::string> tokens, std::vector<std::string> gold) {
    return *derive_bio_labels(Document{"d", std::move(tokens), std::move(gold), std::nullopt}).labels;
  };
  CHECK(label({"deep", "learning", "rocks"}, {"deep learning"}) == std::vector<Tag>{T::B, T::I, T::O});
  CHECK(label({"deep", "learning"}, {"graph"}) == std::vector<Tag>{T::O, T::O});
  CHECK(label({"a", "b", "a", "b"}, {"a b"}) == std::vector<Tag>{T::B, T::I, T::B, T::I});
  // case, stemming and punctuation are normalized away
  CHECK(label({"Graph", "Embeddings", "."}, {"graph embedding"}) == std::vector<Tag>{T::B, T::I, T::O});
  // leftmost-longest
  CHECK(label({"neural", "graph", "nets"}, {"neural graph", "neural graph nets", "graph nets"}) ==
        std::vector<Tag>{T::B, T::I, T::I});
  CHECK(label({"x", "graph", "nets"}, {"graph", "graph nets"}) == std::vector<Tag>{T::O, T::B, T::I});
  // a match never starts or ends on a punctuation-only token
  CHECK(label({"graph", ",", "nets"}, {"graph nets"}) == std::vector<Tag>{T::B, T::I, T::I});
  CHECK(label({"(", "graph", ")"}, {"graph"}) == std::vector<Tag>{T::O, T::B, T::O});
  CHECK_THROWS(derive_bio_labels(Document{"d", {"x"}, std::nullopt, std::nullopt}));
}

TEST_CASE("derived labels are valid BIO of the right length and decode into the gold set") {
  std::mt19937 rng(42);
  const std::vector<std::string> vocab = {"graph", "Graphs", "neural", "net", "deep", "learning", ",", "the", "of", "x"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> tokens(1 + rng() % 30);
    for (auto& t : tokens) t = vocab[rng() % vocab.size()];
    std::vector<std::string> gold;
    for (int g = 0, n = 1 + static_cast<int>(rng() % 3); g < n; ++g) {
      std::string phrase;
      for (int w = 0, len = 1 + static_cast<int>(rng() % 3); w < len; ++w)
        phrase += (w ? " " : "") + vocab[rng() % vocab.size()];
      gold.push_back(phrase);
    }
    const auto labels = project_bio_labels(tokens, gold);
    REQUIRE(labels.size() == tokens.size());
    CHECK(valid_bio(labels));
    std::set<std::string> gold_norm;
    for (const auto& g : gold) gold_norm.insert(normalize_phrase(g));
    for (const auto& p : decode_bio(tokens, labels).phrases) CHECK(gold_norm.count(normalize_phrase(p.text)) == 1);
  }
}
