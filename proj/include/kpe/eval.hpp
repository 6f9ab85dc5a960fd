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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpe/corpus.hpp"
#include "kpe/text.hpp"

namespace kpe {

// k = nullopt means ALL: k equals the number of predicted keyphrases.
using CutOff = std::optional<int>;

CutOff parse_cutoff(const std::string& s);  // "all" or a positive integer
std::string cutoff_name(CutOff k);

struct EvalRow {
  std::string doc_id;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold = 0;       // |Y| after normalization
  std::size_t predicted = 0;  // |Y_k|
  std::size_t matches = 0;    // |Y ∩ Y_k|
};

// Precision@k = |Y ∩ Y_k| / min(|Y_k|, k), Recall@k = |Y ∩ Y_k| / |Y|,
// F1 their harmonic mean (0 when both are 0). Y_k is the first k distinct
// normalized predictions. Throws when the normalized gold set is empty or
// k <= 0.
EvalRow f1_at_k(const std::vector<std::string>& gold, const std::vector<std::string>& predicted,
                CutOff k = std::nullopt);

struct EvalReport {
  CutOff k;
  std::vector<EvalRow> rows;
  std::vector<std::string> skipped;  // documents without usable gold
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
};

// Gold keyphrases of a document: its `keyphrases`, else the phrases spelled
// by its BIO tags.
std::vector<std::string> gold_phrases(const Document& doc);

// Macro average over documents. Every gold document needs a prediction entry.
EvalReport evaluate_corpus(const CorpusSplit& gold, const std::map<std::string, std::vector<std::string>>& predictions,
                           CutOff k = std::nullopt);

// Reads prediction JSONL ({"id", "keyphrases": [{"text", ...}]}); records
// carrying a "config" key are provenance headers and are skipped.
std::map<std::string, std::vector<std::string>> load_predictions(const std::filesystem::path& path);

nlohmann::json to_json(const EvalReport& report);

}  // namespace kpe
