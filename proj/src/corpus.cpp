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

#include "kpe/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "kpe/error.hpp"
#include "kpe/text.hpp"

namespace kpe {

using nlohmann::json;

char tag_char(Tag t) {
  switch (t) {
    case Tag::B: return 'B';
    case Tag::I: return 'I';
    case Tag::O: return 'O';
  }
  return 'O';
}

Tag parse_tag(std::string_view s) {
  if (s.empty()) throw Error("empty BIO tag");
  switch (s.front()) {
    case 'B': case 'b': return Tag::B;
    case 'I': case 'i': return Tag::I;
    case 'O': case 'o': return Tag::O;
    default: throw Error("unknown BIO tag '" + std::string(s) + "'");
  }
}

bool valid_bio(const std::vector<Tag>& tags) {
  Tag prev = Tag::O;
  for (Tag t : tags) {
    if (t == Tag::I && prev == Tag::O) return false;
    prev = t;
  }
  return true;
}

std::string_view split_name(SplitName s) {
  switch (s) {
    case SplitName::kTrain: return "train";
    case SplitName::kValidation: return "validation";
    case SplitName::kTest: return "test";
  }
  return "test";
}

CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::kJsonl;
  throw Error("unsupported corpus format '" + std::string(s) + "'");
}

std::vector<Tag> project_bio_labels(const std::vector<std::string>& tokens,
                                    const std::vector<std::string>& keyphrases) {
  std::vector<Tag> labels(tokens.size(), Tag::O);

  std::unordered_set<std::string> gold;
  std::size_t max_words = 0;
  for (const auto& k : keyphrases) {
    auto words = normalized_words(k);
    if (words.empty()) continue;
    max_words = std::max(max_words, words.size());
    gold.insert(join(words));
  }
  if (gold.empty()) return labels;

  std::vector<std::vector<std::string>> token_words;
  token_words.reserve(tokens.size());
  for (const auto& t : tokens) token_words.push_back(normalized_words(t));

  std::size_t i = 0;
  while (i < tokens.size()) {
    if (token_words[i].empty()) {
      ++i;
      continue;
    }
    std::size_t best_end = 0;
    std::string key;
    std::size_t words = 0;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      for (const auto& w : token_words[j]) {
        if (!key.empty()) key.push_back(' ');
        key += w;
      }
      words += token_words[j].size();
      if (words > max_words) break;
      if (!token_words[j].empty() && gold.count(key)) best_end = j + 1;
    }
    if (best_end == 0) {
      ++i;
      continue;
    }
    labels[i] = Tag::B;
    for (std::size_t j = i + 1; j < best_end; ++j) labels[j] = Tag::I;
    i = best_end;
  }
  return labels;
}

Document derive_bio_labels(Document doc) {
  if (!doc.gold_keyphrases) throw Error("document '" + doc.id + "' has no gold keyphrases");
  doc.labels = project_bio_labels(doc.tokens, *doc.gold_keyphrases);
  return doc;
}

namespace {

Document parse_record(const json& j) {
  if (!j.is_object()) throw Error("record is not a JSON object");
  Document doc;
  if (!j.contains("id")) throw Error("missing field 'id'");
  doc.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();

  if (j.contains("tokens")) {
    doc.tokens = j.at("tokens").get<std::vector<std::string>>();
  } else if (j.contains("text")) {
    doc.tokens = tokenize(j.at("text").get<std::string>());
  } else {
    throw Error("record needs 'tokens' or 'text'");
  }
  if (j.contains("keyphrases") && !j.at("keyphrases").is_null())
    doc.gold_keyphrases = j.at("keyphrases").get<std::vector<std::string>>();

  if (j.contains("tags") && !j.at("tags").is_null()) {
    std::vector<Tag> tags;
    for (const auto& t : j.at("tags")) tags.push_back(parse_tag(t.get<std::string>()));
    if (tags.size() != doc.tokens.size())
      throw Error("tags length " + std::to_string(tags.size()) + " != tokens length " +
                  std::to_string(doc.tokens.size()));
    if (!valid_bio(tags)) throw Error("tags contain an I without a preceding B or I");
    doc.labels = std::move(tags);
  } else if (doc.gold_keyphrases) {
    doc.labels = project_bio_labels(doc.tokens, *doc.gold_keyphrases);
  }
  return doc;
}

}  // namespace

CorpusSplit parse_corpus(std::string_view content, SplitName name, std::string_view origin) {
  CorpusSplit split;
  split.name = name;
  std::unordered_set<std::string> ids;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Document doc = parse_record(json::parse(line));
      if (!ids.insert(doc.id).second) throw Error("duplicate document id '" + doc.id + "'");
      split.documents.push_back(std::move(doc));
    } catch (const std::exception& e) {
      throw LoadError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (split.documents.empty()) throw LoadError(std::string(origin) + ": corpus is empty");
  return split;
}

CorpusSplit load_corpus(const std::filesystem::path& path, CorpusFormat format, SplitName name) {
  if (format != CorpusFormat::kJsonl) throw LoadError("unsupported corpus format");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open corpus '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), name, path.string());
}

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& d : docs) {
    json j;
    j["id"] = d.id;
    j["tokens"] = d.tokens;
    if (d.gold_keyphrases) j["keyphrases"] = *d.gold_keyphrases;
    if (d.labels) {
      std::vector<std::string> tags;
      for (Tag t : *d.labels) tags.emplace_back(1, tag_char(t));
      j["tags"] = tags;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace kpe
