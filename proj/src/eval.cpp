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

#include "kpe/eval.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "kpe/decode.hpp"
#include "kpe/error.hpp"

namespace kpe {

CutOff parse_cutoff(const std::string& s) {
  if (s == "all" || s == "ALL" || s == "K") return std::nullopt;
  std::size_t used = 0;
  int k = 0;
  try {
    k = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || k <= 0) throw Error("k must be 'all' or a positive integer, got '" + s + "'");
  return k;
}

std::string cutoff_name(CutOff k) { return k ? std::to_string(*k) : "all"; }

EvalRow f1_at_k(const std::vector<std::string>& gold, const std::vector<std::string>& predicted, CutOff k) {
  if (k && *k <= 0) throw Error("k must be positive");
  std::unordered_set<std::string> gold_set;
  for (const auto& g : gold) {
    auto n = normalize_phrase(g);
    if (!n.empty()) gold_set.insert(std::move(n));
  }
  if (gold_set.empty()) throw Error("gold keyphrase set is empty");

  std::vector<std::string> top;
  std::unordered_set<std::string> seen;
  for (const auto& p : predicted) {
    if (k && static_cast<int>(top.size()) >= *k) break;
    auto n = normalize_phrase(p);
    if (n.empty() || !seen.insert(n).second) continue;
    top.push_back(std::move(n));
  }

  EvalRow row;
  row.gold = gold_set.size();
  row.predicted = top.size();
  for (const auto& p : top) row.matches += gold_set.count(p);
  const std::size_t denom = k ? std::min(top.size(), static_cast<std::size_t>(*k)) : top.size();
  row.precision = denom ? static_cast<double>(row.matches) / static_cast<double>(denom) : 0.0;
  row.recall = static_cast<double>(row.matches) / static_cast<double>(row.gold);
  const double s = row.precision + row.recall;
  row.f1 = s > 0.0 ? 2.0 * row.precision * row.recall / s : 0.0;
  return row;
}

std::vector<std::string> gold_phrases(const Document& doc) {
  if (doc.gold_keyphrases) return *doc.gold_keyphrases;
  if (doc.labels) return decode_bio(doc.tokens, *doc.labels).texts();
  return {};
}

EvalReport evaluate_corpus(const CorpusSplit& gold, const std::map<std::string, std::vector<std::string>>& predictions,
                           CutOff k) {
  EvalReport report;
  report.k = k;
  for (const auto& doc : gold.documents) {
    auto it = predictions.find(doc.id);
    if (it == predictions.end()) throw Error("no prediction row for document '" + doc.id + "'");
    const auto g = gold_phrases(doc);
    const bool usable = std::any_of(g.begin(), g.end(), [](const auto& p) { return !normalize_phrase(p).empty(); });
    if (!usable) {
      report.skipped.push_back(doc.id);
      continue;
    }
    EvalRow row = f1_at_k(g, it->second, k);
    row.doc_id = doc.id;
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) {
    for (const auto& r : report.rows) {
      report.mean_precision += r.precision;
      report.mean_recall += r.recall;
      report.mean_f1 += r.f1;
    }
    const auto n = static_cast<double>(report.rows.size());
    report.mean_precision /= n;
    report.mean_recall /= n;
    report.mean_f1 /= n;
  }
  return report;
}

std::map<std::string, std::vector<std::string>> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open predictions '" + path.string() + "'");
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("config")) continue;
      std::vector<std::string> phrases;
      for (const auto& p : j.at("keyphrases"))
        phrases.push_back(p.is_string() ? p.get<std::string>() : p.at("text").get<std::string>());
      const std::string id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      if (!out.emplace(id, std::move(phrases)).second) throw Error("duplicate prediction for '" + id + "'");
    } catch (const std::exception& e) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"id", r.doc_id},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"f1", r.f1},
                    {"gold", r.gold},
                    {"predicted", r.predicted},
                    {"matches", r.matches}});
  return {{"k", cutoff_name(report.k)},
          {"documents", report.rows.size()},
          {"skipped", report.skipped},
          {"mean_precision", report.mean_precision},
          {"mean_recall", report.mean_recall},
          {"mean_f1", report.mean_f1},
          {"per_document", std::move(rows)}};
}

}  // namespace kpe
