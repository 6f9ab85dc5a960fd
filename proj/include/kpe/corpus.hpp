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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kpe {

// BIO classes. The numeric values are the tagger's output column indices.
enum class Tag : int { B = 0, I = 1, O = 2 };

inline constexpr int kNumTags = 3;

char tag_char(Tag t);
Tag parse_tag(std::string_view s);  // "B"/"I"/"O", also "B-KEY" style prefixes

// True when no I follows an O or starts the sequence.
bool valid_bio(const std::vector<Tag>& tags);

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::vector<std::string>> gold_keyphrases;
  std::optional<std::vector<Tag>> labels;
};

enum class SplitName { kTrain, kValidation, kTest };

std::string_view split_name(SplitName s);

struct CorpusSplit {
  SplitName name = SplitName::kTest;
  std::vector<Document> documents;
};

enum class CorpusFormat { kJsonl };

CorpusFormat parse_corpus_format(std::string_view s);

// One JSON object per line: {"id", "tokens" | "text", "keyphrases"?, "tags"?}.
// Missing tokens are produced by tokenize(text). When keyphrases are present
// and tags are not, labels are derived. Blank lines are skipped.
CorpusSplit load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::kJsonl,
                        SplitName name = SplitName::kTest);

// Same, from an in-memory stream of lines; `origin` prefixes error messages.
CorpusSplit parse_corpus(std::string_view content, SplitName name, std::string_view origin = "<memory>");

// Labels every leftmost-longest token span whose normalized form equals a
// normalized gold keyphrase as B I..I; everything else O. A span must begin
// and end on tokens with a nonempty normalized form.
Document derive_bio_labels(Document doc);

std::vector<Tag> project_bio_labels(const std::vector<std::string>& tokens,
                                    const std::vector<std::string>& keyphrases);

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs);

}  // namespace kpe
