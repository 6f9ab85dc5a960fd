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

// Command-line front end: build-graph, train-gcn, embed, train-tagger,
// predict, evaluate and run (the whole pipeline).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpe/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

kpe::SplitName split_from_path(const std::string& path) {
  const std::string stem = kpe::to_lower(fs::path(path).filename().string());
  if (stem.find("train") != std::string::npos) return kpe::SplitName::kTrain;
  if (stem.find("valid") != std::string::npos || stem.find("dev") != std::string::npos)
    return kpe::SplitName::kValidation;
  return kpe::SplitName::kTest;
}

kpe::CorpusSplit load(const std::string& path, const std::string& format) {
  return kpe::load_corpus(path, kpe::parse_corpus_format(format), split_from_path(path));
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw kpe::Error("cannot write '" + path + "'");
  return file;
}

struct GraphOptions {
  std::string scope = "document";
};

void add_graph_options(CLI::App* sub, kpe::RunConfig& cfg, GraphOptions& g) {
  sub->add_option("--window", cfg.window, "co-occurrence window size")->capture_default_str();
  sub->add_option("--neg-ratio", cfg.neg_ratio, "negative samples per edge")->capture_default_str();
  sub->add_option("--dim", cfg.gcn_dim, "GCN embedding dimension")->capture_default_str();
  sub->add_option("--layers", cfg.gcn_layers, "GCN depth K")->capture_default_str();
  sub->add_option("--gcn-epochs", cfg.gcn_epochs, "GCN training epochs")->capture_default_str();
  sub->add_option("--gcn-lr", cfg.gcn_lr, "GCN gradient-descent step")->capture_default_str();
  sub->add_option("--graph-scope", g.scope, "document or corpus")->capture_default_str();
}

void add_tagger_options(CLI::App* sub, kpe::RunConfig& cfg) {
  sub->add_option("--embeddings", cfg.embeddings, "KPE1 file or hashed:<seed>")->capture_default_str();
  sub->add_option("--context-dim", cfg.context_dim, "d_c of the hashed provider")->capture_default_str();
  sub->add_option("--proj-dim", cfg.proj_dim, "projection width of each branch")->capture_default_str();
  sub->add_option("--batch", cfg.batch, "sequences per mini-batch")->capture_default_str();
  sub->add_option("--epochs", cfg.tagger_epochs, "tagger epochs")->capture_default_str();
  sub->add_option("--patience", cfg.patience, "epochs without improvement before annealing")->capture_default_str();
  sub->add_option("--anneal", cfg.anneal, "learning-rate annealing factor")->capture_default_str();
  sub->add_option("--lr", cfg.lr, "AdamW learning rate")->capture_default_str();
  sub->add_option("--chunk-limit", cfg.chunk_limit, "tokens per tagger window (also the stride)")->capture_default_str();
  sub->add_flag("--no-graph", [&cfg](std::int64_t n) { cfg.use_graph = n == 0; }, "ablation: zero the graph branch");
}

// GCN directory layout: index.json (config + per-document checkpoint names
// and logs), one .gcn file per document, graph.json for corpus scope.
void save_gcn_dir(const fs::path& dir, const std::vector<const kpe::Document*>& docs, const kpe::GraphStage& stage,
                  const kpe::RunConfig& cfg) {
  fs::create_directories(dir);
  json entries = json::array();
  for (std::size_t i = 0; i < stage.models.size(); ++i) {
    const std::string file = "model_" + std::to_string(i) + ".gcn";
    kpe::save_gcn(dir / file, stage.models[i]);
    json e = {{"checkpoint", file}, {"log", kpe::to_json(stage.logs[i].second)}};
    e["id"] = cfg.graph_scope == kpe::GraphScope::kCorpus ? json() : json(docs[i]->id);
    entries.push_back(std::move(e));
  }
  if (cfg.graph_scope == kpe::GraphScope::kCorpus && !stage.graphs.empty())
    kpe::write_json(dir / "graph.json", kpe::graph_to_json(stage.graphs.front()));
  kpe::write_json(dir / "index.json", {{"config", kpe::to_json(cfg)}, {"models", std::move(entries)}});
}

json read_gcn_index(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw kpe::LoadError("no index.json in '" + dir.string() + "'");
  return json::parse(in);
}

// Graph-side settings come from the directory the GCNs were trained with.
void adopt_graph_config(kpe::RunConfig& cfg, const fs::path& dir) {
  const kpe::RunConfig saved = kpe::config_from_json(read_gcn_index(dir).at("config"));
  cfg.window = saved.window;
  cfg.neg_ratio = saved.neg_ratio;
  cfg.gcn_dim = saved.gcn_dim;
  cfg.gcn_layers = saved.gcn_layers;
  cfg.gcn_epochs = saved.gcn_epochs;
  cfg.gcn_lr = saved.gcn_lr;
  cfg.graph_scope = saved.graph_scope;
}

// Token rows of Z for each document, from a saved GCN directory.
std::vector<Eigen::MatrixXd> load_gcn_dir(const fs::path& dir, const std::vector<const kpe::Document*>& docs) {
  const json index = read_gcn_index(dir);
  const kpe::RunConfig cfg = kpe::config_from_json(index.at("config"));
  std::vector<Eigen::MatrixXd> out(docs.size());
  if (cfg.graph_scope == kpe::GraphScope::kCorpus) {
    std::ifstream gin(dir / "graph.json");
    const auto graph = kpe::graph_from_json(json::parse(gin));
    const auto model = kpe::load_gcn(dir / index.at("models").at(0).at("checkpoint").get<std::string>());
    const Eigen::MatrixXd z = kpe::forward(model, graph);
    for (std::size_t i = 0; i < docs.size(); ++i) out[i] = kpe::gather_token_rows(graph, z, docs[i]->tokens);
    return out;
  }
  std::map<std::string, std::string> files;
  for (const auto& m : index.at("models")) files[m.at("id").get<std::string>()] = m.at("checkpoint").get<std::string>();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto it = files.find(docs[i]->id);
    if (it == files.end()) throw kpe::PipelineError("load-gcn", docs[i]->id, "no checkpoint in '" + dir.string() + "'");
    const auto graph = kpe::build_graph(docs[i]->tokens, cfg.window);
    const auto model = kpe::load_gcn(dir / it->second);
    out[i] = kpe::gather_token_rows(graph, kpe::forward(model, graph), docs[i]->tokens);
  }
  return out;
}

std::vector<const kpe::Document*> pointers(const kpe::CorpusSplit& s) {
  std::vector<const kpe::Document*> out;
  for (const auto& d : s.documents) out.push_back(&d);
  return out;
}

std::vector<Eigen::MatrixXd> graph_rows(const std::vector<const kpe::Document*>& docs, const kpe::RunConfig& cfg,
                                        const std::string& gcn_dir) {
  if (cfg.use_graph && !gcn_dir.empty()) return load_gcn_dir(gcn_dir, docs);
  return kpe::run_graph_stage(docs, cfg).token_embeddings;
}

std::vector<kpe::EmbeddingMatrix> contextual_rows(const std::vector<const kpe::Document*>& docs,
                                                  const kpe::EmbeddingProvider& provider) {
  std::vector<kpe::EmbeddingMatrix> out;
  for (const auto* d : docs) {
    try {
      out.push_back(kpe::embed_document(provider, *d).h);
    } catch (const std::exception& e) {
      throw kpe::PipelineError("embed", d->id, e.what());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-enhanced keyphrase extraction"};
  app.require_subcommand(1);
  // Subcommands pass --config up to the main app, which reads the file;
  // settings for `run` live in its [run] section. Flags override the file.
  app.set_config("--config", "", "TOML configuration file");
  app.fallthrough();

  kpe::RunConfig cfg;
  GraphOptions graph_opts;
  std::string corpus, format = "jsonl", out, gcn_dir, valid, model_path, gold, pred, k = "all";
  std::vector<std::string> corpora;

  auto* build = app.add_subcommand("build-graph", "dump per-document co-occurrence graphs as JSONL");
  build->add_option("--corpus", corpus, "JSONL corpus")->required();
  build->add_option("--format", format)->capture_default_str();
  build->add_option("--window", cfg.window)->capture_default_str();
  build->add_option("--out", out, "output path (stdout by default)");

  auto* train_gcn = app.add_subcommand("train-gcn", "train link-prediction GCNs and save checkpoints");
  train_gcn->add_option("--corpus", corpora, "one or more corpora; cover every document tagged later")->required();
  train_gcn->add_option("--format", format)->capture_default_str();
  add_graph_options(train_gcn, cfg, graph_opts);
  train_gcn->add_option("--seed", cfg.seed)->capture_default_str();
  train_gcn->add_option("--threads", cfg.threads);
  train_gcn->add_option("--out", out, "output directory")->required();

  auto* embed = app.add_subcommand("embed", "write contextual embeddings of a corpus as KPE1");
  embed->add_option("--corpus", corpus)->required();
  embed->add_option("--format", format)->capture_default_str();
  embed->add_option("--embeddings", cfg.embeddings)->capture_default_str();
  embed->add_option("--context-dim", cfg.context_dim)->capture_default_str();
  embed->add_option("--out", out)->required();

  auto* train_tagger = app.add_subcommand("train-tagger", "train the graph-enhanced tagger");
  train_tagger->add_option("--corpus", corpus, "training corpus")->required();
  train_tagger->add_option("--valid", valid, "validation corpus");
  train_tagger->add_option("--format", format)->capture_default_str();
  train_tagger->add_option("--gcn", gcn_dir, "directory written by train-gcn (trained on the fly otherwise)");
  add_graph_options(train_tagger, cfg, graph_opts);
  add_tagger_options(train_tagger, cfg);
  train_tagger->add_option("--seed", cfg.seed)->capture_default_str();
  train_tagger->add_option("--threads", cfg.threads);
  train_tagger->add_option("--out", out, "tagger checkpoint")->required();

  auto* predict = app.add_subcommand("predict", "tag a corpus and emit keyphrases as JSONL");
  predict->add_option("--model", model_path, "tagger checkpoint")->required();
  predict->add_option("--corpus", corpus)->required();
  predict->add_option("--format", format)->capture_default_str();
  predict->add_option("--gcn", gcn_dir, "directory written by train-gcn");
  predict->add_option("--embeddings", cfg.embeddings, "overrides the checkpoint's provider");
  predict->add_option("--threads", cfg.threads);
  predict->add_option("--out", out, "output path (stdout by default)");

  auto* evaluate = app.add_subcommand("evaluate", "F1@k of predictions against a gold corpus");
  evaluate->add_option("--gold", gold)->required();
  evaluate->add_option("--pred", pred)->required();
  evaluate->add_option("--format", format)->capture_default_str();
  evaluate->add_option("--k", k, "all or a positive integer")->capture_default_str();

  auto* run = app.add_subcommand("run", "full pipeline: graphs, GCNs, tagger, prediction, evaluation");
  run->add_option("--train", cfg.train_path)->required();
  run->add_option("--valid", cfg.valid_path);
  run->add_option("--test", cfg.test_path)->required();
  add_graph_options(run, cfg, graph_opts);
  add_tagger_options(run, cfg);
  run->add_option("--k", cfg.k)->capture_default_str();
  run->add_option("--seed", cfg.seed)->capture_default_str();
  run->add_option("--threads", cfg.threads);
  run->add_option("--out", cfg.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.graph_scope = kpe::parse_graph_scope(graph_opts.scope);

    if (*build) {
      const auto split = load(corpus, format);
      std::ofstream file;
      std::ostream& os = open_output(out, file);
      for (const auto& d : split.documents) {
        json j = kpe::graph_to_json(kpe::build_graph(d.tokens, cfg.window));
        j["id"] = d.id;
        j["window"] = cfg.window;
        os << j.dump() << '\n';
      }
    } else if (*train_gcn) {
      cfg.validate();
      std::vector<kpe::CorpusSplit> splits;
      for (const auto& c : corpora) splits.push_back(load(c, format));
      std::vector<const kpe::Document*> docs;
      for (const auto& s : splits)
        for (const auto* d : pointers(s)) docs.push_back(d);
      const auto stage = kpe::run_graph_stage(docs, cfg);
      save_gcn_dir(out, docs, stage, cfg);
      json logs = json::object();
      for (const auto& [id, log] : stage.logs) logs[id] = kpe::to_json(log);
      kpe::write_json(fs::path(out) / "train_log.json", {{"config", kpe::to_json(cfg)}, {"documents", logs}});
    } else if (*embed) {
      const auto split = load(corpus, format);
      const auto provider = kpe::make_provider(cfg.embeddings, cfg.context_dim);
      std::vector<kpe::ContextualEmbeddings> rows;
      for (const auto& d : split.documents) rows.push_back(kpe::embed_document(*provider, d));
      kpe::write_kpe1(out, provider->dim(), rows);
    } else if (*train_tagger) {
      if (!gcn_dir.empty() && cfg.use_graph) adopt_graph_config(cfg, gcn_dir);
      cfg.validate();
      cfg.train_path = corpus;
      cfg.valid_path = valid;
      const auto train = load(corpus, format);
      kpe::CorpusSplit valid_split{kpe::SplitName::kValidation, {}};
      if (!valid.empty()) valid_split = kpe::load_corpus(valid, kpe::parse_corpus_format(format), kpe::SplitName::kValidation);
      auto train_docs = pointers(train);
      auto valid_docs = pointers(valid_split);
      if (valid_docs.empty() && train_docs.size() >= 2) {
        const std::size_t held = std::max<std::size_t>(1, train_docs.size() / 10);
        valid_docs.assign(train_docs.end() - static_cast<std::ptrdiff_t>(held), train_docs.end());
        train_docs.resize(train_docs.size() - held);
      }
      const auto provider = kpe::make_provider(cfg.embeddings, cfg.context_dim);
      auto sequences = [&](const std::vector<const kpe::Document*>& docs) {
        const auto z = graph_rows(docs, cfg, gcn_dir);
        const auto h = contextual_rows(docs, *provider);
        std::vector<kpe::TaggedSequence<double>> seqs;
        for (std::size_t i = 0; i < docs.size(); ++i)
          for (auto& s : kpe::make_sequences(*docs[i], z[i], h[i], cfg.chunk_limit, true)) seqs.push_back(std::move(s));
        return seqs;
      };
      const auto train_seqs = sequences(train_docs);
      const auto valid_seqs = sequences(valid_docs);
      auto model = kpe::init_tagger<double>(cfg.gcn_dim, provider->dim(), cfg.proj_dim,
                                            kpe::mix_seed(cfg.seed, 0x544147ULL), cfg.use_graph);
      auto [trained, log] = kpe::train_tagger<double>(std::move(model), train_seqs, valid_seqs, cfg.tagger_options());
      kpe::save_tagger(out, trained);
      kpe::write_json(out + ".json", {{"config", kpe::to_json(cfg)}, {"gcn", gcn_dir}, {"log", kpe::to_json(log)}});
    } else if (*predict) {
      const auto model = kpe::load_tagger(model_path);
      std::ifstream sidecar(model_path + ".json");
      kpe::RunConfig model_cfg;
      if (sidecar) model_cfg = kpe::config_from_json(json::parse(sidecar).at("config"));
      if (predict->count("--embeddings")) model_cfg.embeddings = cfg.embeddings;
      model_cfg.threads = cfg.threads;
      model_cfg.use_graph = model.use_graph;
      if (model.graph_dim() != model_cfg.gcn_dim) model_cfg.gcn_dim = static_cast<int>(model.graph_dim());
      const auto split = load(corpus, format);
      const auto docs = pointers(split);
      const auto provider = kpe::make_provider(model_cfg.embeddings, static_cast<int>(model.context_dim()));
      const auto z = graph_rows(docs, model_cfg, gcn_dir);
      const auto h = contextual_rows(docs, *provider);
      std::vector<json> records;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto p = kpe::predict_document(model, z[i], h[i], model_cfg.chunk_limit);
        records.push_back(kpe::prediction_json(*docs[i], p));
      }
      std::ofstream file;
      std::ostream& os = open_output(out, file);
      os << json{{"config", kpe::to_json(model_cfg)}}.dump() << '\n';
      for (const auto& r : records) os << r.dump() << '\n';
    } else if (*evaluate) {
      const auto split = kpe::load_corpus(gold, kpe::parse_corpus_format(format), kpe::SplitName::kTest);
      const auto report = kpe::evaluate_corpus(split, kpe::load_predictions(pred), kpe::parse_cutoff(k));
      std::cout << kpe::to_json(report).dump(2) << '\n';
    } else if (*run) {
      const auto result = kpe::run_pipeline(cfg);
      auto summary = kpe::to_json(result.report);
      summary.erase("per_document");
      summary["no_graph"] = !cfg.use_graph;
      std::cout << summary.dump(2) << '\n';
    }
  } catch (const kpe::PipelineError& e) {
    std::cerr << "kpe: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kpe: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
