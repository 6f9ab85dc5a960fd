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

#include "kpe/decode.hpp"
#include "kpe/text.hpp"

using namespace kpe;
using Eigen::MatrixXd;

namespace {

std::vector<Tag> tags(const std::string& s) {
  std::vector<Tag> out;
  for (char c : s) out.push_back(parse_tag(std::string(1, c)));
  return out;
}

}  // namespace

TEST_CASE("span assembly") {
  const std::vector<std::string> toks{"graph", "nets", "x"};
  CHECK(decode_bio(toks, tags("BIO")).texts() == std::vector<std::string>{"graph nets"});
  CHECK(decode_bio(toks, tags("OII")).texts() == std::vector<std::string>{"nets x"});
  CHECK(decode_bio(toks, tags("IOO")).texts() == std::vector<std::string>{"graph"});
  CHECK(decode_bio(toks, tags("BBO")).texts() == std::vector<std::string>{"graph", "nets"});
  CHECK(decode_bio(toks, tags("OOO")).size() == 0);
  CHECK(decode_bio({}, {}).size() == 0);
}

TEST_CASE("scores are mean winning probabilities, ranked descending") {
  const std::vector<std::string> toks{"a", "b", "c", "d"};
  const MatrixXd probs{{0.6, 0.3, 0.1}, {0.2, 0.8, 0.0}, {0.1, 0.2, 0.7}, {0.9, 0.05, 0.05}};
  const auto set = decode_bio(toks, tags("BIOB"), probs);
  REQUIRE(set.size() == 2);
  CHECK(set.phrases[0].text == "d");
  CHECK(set.phrases[0].score == doctest::Approx(0.9));
  CHECK(set.phrases[1].text == "a b");
  CHECK(set.phrases[1].score == doctest::Approx(0.7));
}

TEST_CASE("duplicates merge on the normalized form keeping the best score") {
  const std::vector<std::string> toks{"Graphs", ",", "graph", "x", "y"};
  const MatrixXd probs{{0.5, 0.3, 0.2}, {0, 0, 1}, {0.8, 0.1, 0.1}, {0.6, 0.2, 0.2}, {0.6, 0.2, 0.2}};
  const auto set = decode_bio(toks, tags("BOBBB"), probs);
  std::set<std::string> norms;
  for (const auto& p : set.phrases) {
    CHECK(norms.insert(normalize_phrase(p.text)).second);
    CHECK(p.score >= 0.0);
    CHECK(p.score <= 1.0);
  }
  REQUIRE(set.size() == 3);
  CHECK(set.phrases[0].text == "Graphs");  // first surface form, best score
  CHECK(set.phrases[0].score == doctest::Approx(0.8));
  // x and y tie and keep their document order.
  CHECK(set.phrases[1].text == "x");
  CHECK(set.phrases[2].text == "y");
}

TEST_CASE("punctuation-only spans are dropped") {
  const std::vector<std::string> toks{"(", ")", "net"};
  CHECK(decode_bio(toks, tags("BIB")).texts() == std::vector<std::string>{"net"});
}

TEST_CASE("prediction record") {
  KeyphraseSet set{{{"graph nets", 0.75}}};
  const auto j = prediction_record("doc-1", set);
  CHECK(j["id"] == "doc-1");
  CHECK(j["keyphrases"][0]["text"] == "graph nets");
  CHECK(j["keyphrases"][0]["score"] == 0.75);
}

TEST_CASE("random label sequences: no duplicates, sorted, bounded") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    std::vector<std::string> toks;
    std::vector<Tag> labels;
    MatrixXd probs(n, 3);
    for (int t = 0; t < n; ++t) {
      toks.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
      labels.push_back(static_cast<Tag>(rng() % 3));
      for (int c = 0; c < 3; ++c) probs(t, c) = u(rng);
      probs.row(t) /= probs.row(t).sum();
    }
    const auto set = decode_bio(toks, labels, probs);
    std::set<std::string> norms;
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(norms.insert(normalize_phrase(set.phrases[i].text)).second);
      if (i) CHECK(set.phrases[i - 1].score >= set.phrases[i].score);
    }
  }
}
