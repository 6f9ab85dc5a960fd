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

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kpe/corpus.hpp"

namespace kpe {

struct ScoredPhrase {
  std::string text;
  double score;
};

// Predicted keyphrases of one document, best first, unique after
// normalize_phrase.
struct KeyphraseSet {
  std::vector<ScoredPhrase> phrases;
  std::size_t size() const { return phrases.size(); }
  std::vector<std::string> texts() const;
};

// Spans are one B followed by any number of I; an I after O (or at the start)
// opens a span as if it were B. A span's score is the mean over its tokens of
// the winning tag probability. Duplicates keep their highest score; ties keep
// first-occurrence order. Spans whose normalized form is empty are dropped.
KeyphraseSet decode_bio(const std::vector<std::string>& tokens, const std::vector<Tag>& labels,
                        const Eigen::MatrixXd& probs);

// Gold/hard labels: every token scores 1.
KeyphraseSet decode_bio(const std::vector<std::string>& tokens, const std::vector<Tag>& labels);

// {"id": ..., "keyphrases": [{"text", "score"}, ...]}
nlohmann::json prediction_record(const std::string& doc_id, const KeyphraseSet& set);

}  // namespace kpe
