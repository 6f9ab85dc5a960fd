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

#include "kpe/decode.hpp"

#include <algorithm>
#include <unordered_map>

#include "kpe/error.hpp"
#include "kpe/text.hpp"

namespace kpe {

std::vector<std::string> KeyphraseSet::texts() const {
  std::vector<std::string> out;
  for (const auto& p : phrases) out.push_back(p.text);
  return out;
}

KeyphraseSet decode_bio(const std::vector<std::string>& tokens, const std::vector<Tag>& labels,
                        const Eigen::MatrixXd& probs) {
  if (tokens.size() != labels.size() || static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw ShapeError("decode_bio: tokens, labels and probabilities must align");

  struct Candidate {
    std::string text;
    double score;
  };
  std::vector<Candidate> found;
  std::unordered_map<std::string, std::size_t> by_key;

  auto emit = [&](std::size_t begin, std::size_t end) {
    std::vector<std::string> words(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(end));
    std::string text = join(words);
    std::string key = normalize_phrase(text);
    if (key.empty()) return;
    double score = 0.0;
    for (std::size_t t = begin; t < end; ++t) score += probs.row(static_cast<Eigen::Index>(t)).maxCoeff();
    score /= static_cast<double>(end - begin);
    auto [it, fresh] = by_key.emplace(std::move(key), found.size());
    if (fresh) {
      found.push_back({std::move(text), score});
    } else {
      found[it->second].score = std::max(found[it->second].score, score);
    }
  };

  std::size_t start = 0;
  bool open = false;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const Tag tag = labels[t];
    if (tag == Tag::B || (tag == Tag::I && !open)) {
      if (open) emit(start, t);
      start = t;
      open = true;
    } else if (tag == Tag::O && open) {
      emit(start, t);
      open = false;
    }
  }
  if (open) emit(start, labels.size());

  std::stable_sort(found.begin(), found.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  KeyphraseSet out;
  for (auto& c : found) out.phrases.push_back({std::move(c.text), c.score});
  return out;
}

KeyphraseSet decode_bio(const std::vector<std::string>& tokens, const std::vector<Tag>& labels) {
  return decode_bio(tokens, labels, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(labels.size()), kNumTags));
}

nlohmann::json prediction_record(const std::string& doc_id, const KeyphraseSet& set) {
  nlohmann::json phrases = nlohmann::json::array();
  for (const auto& p : set.phrases) phrases.push_back({{"text", p.text}, {"score", p.score}});
  return {{"id", doc_id}, {"keyphrases", std::move(phrases)}};
}

}  // namespace kpe
