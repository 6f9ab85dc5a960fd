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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kpe/cooc_graph.hpp"
#include "kpe/corpus.hpp"
#include "kpe/decode.hpp"
#include "kpe/embeddings.hpp"
#include "kpe/eval.hpp"
#include "kpe/gcn.hpp"
#include "kpe/link_prediction.hpp"
#include "kpe/tagger.hpp"

namespace kpe {

enum class GraphScope { kDocument, kCorpus };

GraphScope parse_graph_scope(const std::string& s);
std::string graph_scope_name(GraphScope s);

// Effective settings of a run. Defaults follow the published setup where it
// states one.
struct RunConfig {
  int window = kDefaultWindow;
  int neg_ratio = kDefaultNegativeRatio;
  int gcn_dim = kDefaultGcnDim;
  int gcn_layers = 2;
  int gcn_epochs = 5;
  double gcn_lr = 0.05;
  GraphScope graph_scope = GraphScope::kDocument;

  std::string embeddings = "hashed:0";
  int context_dim = kDefaultHashedContextDim;  // hashed provider only

  int proj_dim = kDefaultProjectionDim;
  int batch = 10;
  int tagger_epochs = 100;
  int patience = 5;
  double anneal = 0.5;
  double lr = 5e-4;
  int chunk_limit = kDefaultChunkLimit;
  bool use_graph = true;

  std::string k = "all";
  std::uint64_t seed = 13;
  int threads = 0;  // 0: hardware concurrency

  std::string train_path, valid_path, test_path, out_dir;

  // Throws on non-positive counts or anneal outside (0, 1].
  void validate() const;
  std::vector<int> gcn_dims() const;
  GcnTrainOptions gcn_options(std::uint64_t doc_seed) const;
  TaggerTrainOptions tagger_options() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

// Error raised by a pipeline stage; what() names the stage and document.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, std::string doc_id, const std::string& message);
  const std::string& stage() const { return stage_; }
  const std::string& doc_id() const { return doc_id_; }

 private:
  std::string stage_;
  std::string doc_id_;
};

// Runs fn(i) for i in [0, n) on a small worker pool. Work items must be
// independent; results are written by index so output order is fixed.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Graph side of one document: its graph, trained GCN and per-token rows of Z.
struct GraphFeatures {
  CoocGraph graph;
  GcnModel<double> model;
  GcnTrainLog log;
  Eigen::MatrixXd node_embeddings;   // |V| x d_g
  Eigen::MatrixXd token_embeddings;  // n_tokens x d_g
};

// Builds and trains the GCN for one token sequence (graph of that sequence).
GraphFeatures document_graph_features(const Document& doc, const RunConfig& cfg, std::uint64_t seed);

// Token rows of Z for a document under a graph built elsewhere.
Eigen::MatrixXd gather_token_rows(const CoocGraph& graph, const Eigen::MatrixXd& z,
                                  const std::vector<std::string>& tokens);

// Per-document Z rows for a set of documents under the configured scope.
// Logs are keyed by document id (or "<corpus>" for corpus scope).
struct GraphStage {
  std::vector<Eigen::MatrixXd> token_embeddings;
  std::vector<std::pair<std::string, GcnTrainLog>> logs;
  std::vector<GcnModel<double>> models;
  std::vector<CoocGraph> graphs;
};

GraphStage run_graph_stage(const std::vector<const Document*>& docs, const RunConfig& cfg);

// Splits a document into chunk-sized training/inference units.
std::vector<TaggedSequence<double>> make_sequences(const Document& doc, const Eigen::MatrixXd& z_tokens,
                                                   const EmbeddingMatrix& h, int chunk_limit,
                                                   bool require_labels);

// Predicts chunk by chunk and concatenates: one row per token.
TagPrediction<double> predict_document(const TaggerModel<double>& model, const Eigen::MatrixXd& z_tokens,
                                       const EmbeddingMatrix& h, int chunk_limit);

// Prediction record plus per-token "tags" and "probs" (B, I, O).
nlohmann::json prediction_json(const Document& doc, const TagPrediction<double>& pred);

struct PipelineResult {
  EvalReport report;
  std::vector<nlohmann::json> predictions;  // one record per test document
  TaggerTrainLog tagger_log;
  TaggerModel<double> tagger;
};

// build graph -> edge dataset -> GCN -> Z -> embed -> train tagger -> predict
// -> decode -> evaluate. Writes artifacts into cfg.out_dir when it is set.
PipelineResult run_pipeline(const RunConfig& cfg);

// Same, on in-memory splits (valid may be empty: a tail of train is held out).
PipelineResult run_pipeline(const RunConfig& cfg, const CorpusSplit& train, const CorpusSplit& valid,
                            const CorpusSplit& test);

void write_jsonl(const std::filesystem::path& path, const nlohmann::json& header,
                 const std::vector<nlohmann::json>& records);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace kpe
