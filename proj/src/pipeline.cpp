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

#include "kpe/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "kpe/random.hpp"

namespace kpe {

GraphScope parse_graph_scope(const std::string& s) {
  if (s == "document") return GraphScope::kDocument;
  if (s == "corpus") return GraphScope::kCorpus;
  throw Error("graph scope must be 'document' or 'corpus', got '" + s + "'");
}

std::string graph_scope_name(GraphScope s) { return s == GraphScope::kCorpus ? "corpus" : "document"; }

void RunConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw Error(std::string(name) + " must be positive");
  };
  if (window < 2) throw Error("window must be >= 2");
  positive(neg_ratio, "neg_ratio");
  positive(gcn_dim, "gcn_dim");
  positive(gcn_layers, "gcn_layers");
  positive(gcn_epochs, "gcn_epochs");
  positive(context_dim, "context_dim");
  positive(proj_dim, "proj_dim");
  positive(batch, "batch");
  positive(tagger_epochs, "tagger_epochs");
  positive(patience, "patience");
  positive(chunk_limit, "chunk_limit");
  if (!(anneal > 0.0 && anneal <= 1.0)) throw Error("anneal must be in (0, 1]");
  if (lr < 0.0 || gcn_lr < 0.0) throw Error("learning rates must be non-negative");
  parse_cutoff(k);
}

std::vector<int> RunConfig::gcn_dims() const { return std::vector<int>(static_cast<std::size_t>(gcn_layers) + 1, gcn_dim); }

GcnTrainOptions RunConfig::gcn_options(std::uint64_t doc_seed) const {
  GcnTrainOptions o;
  o.epochs = gcn_epochs;
  o.learning_rate = gcn_lr;
  o.seed = doc_seed;
  return o;
}

TaggerTrainOptions RunConfig::tagger_options() const {
  TaggerTrainOptions o;
  o.batch_size = batch;
  o.epochs = tagger_epochs;
  o.learning_rate = lr;
  o.patience = patience;
  o.anneal = anneal;
  o.seed = seed;
  return o;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"window", c.window},
          {"neg_ratio", c.neg_ratio},
          {"gcn_dim", c.gcn_dim},
          {"gcn_layers", c.gcn_layers},
          {"gcn_epochs", c.gcn_epochs},
          {"gcn_lr", c.gcn_lr},
          {"graph_scope", graph_scope_name(c.graph_scope)},
          {"embeddings", c.embeddings},
          {"context_dim", c.context_dim},
          {"proj_dim", c.proj_dim},
          {"batch", c.batch},
          {"tagger_epochs", c.tagger_epochs},
          {"patience", c.patience},
          {"anneal", c.anneal},
          {"lr", c.lr},
          {"chunk_limit", c.chunk_limit},
          {"no_graph", !c.use_graph},
          {"k", c.k},
          {"seed", c.seed},
          {"train", c.train_path},
          {"valid", c.valid_path},
          {"test", c.test_path}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  get("window", c.window);
  get("neg_ratio", c.neg_ratio);
  get("gcn_dim", c.gcn_dim);
  get("gcn_layers", c.gcn_layers);
  get("gcn_epochs", c.gcn_epochs);
  get("gcn_lr", c.gcn_lr);
  if (j.contains("graph_scope")) c.graph_scope = parse_graph_scope(j.at("graph_scope").get<std::string>());
  get("embeddings", c.embeddings);
  get("context_dim", c.context_dim);
  get("proj_dim", c.proj_dim);
  get("batch", c.batch);
  get("tagger_epochs", c.tagger_epochs);
  get("patience", c.patience);
  get("anneal", c.anneal);
  get("lr", c.lr);
  get("chunk_limit", c.chunk_limit);
  if (j.contains("no_graph")) c.use_graph = !j.at("no_graph").get<bool>();
  get("k", c.k);
  get("seed", c.seed);
  get("train", c.train_path);
  get("valid", c.valid_path);
  get("test", c.test_path);
  return c;
}

PipelineError::PipelineError(std::string stage, std::string doc_id, const std::string& message)
    : Error("stage '" + stage + "'" + (doc_id.empty() ? std::string() : " (document '" + doc_id + "')") + ": " +
            message),
      stage_(std::move(stage)),
      doc_id_(std::move(doc_id)) {}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd gather_token_rows(const CoocGraph& graph, const Eigen::MatrixXd& z,
                                  const std::vector<std::string>& tokens) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(tokens.size()), z.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) rows.row(static_cast<Eigen::Index>(t)) = z.row(graph.node_of(tokens[t]));
  return rows;
}

namespace {

std::uint64_t document_seed(std::uint64_t seed, const std::string& doc_id) { return mix_seed(seed, fnv1a(doc_id)); }

// Shared by both scopes: W_k init from cfg.seed, EMBED rows keyed by word.
GcnModel<double> train_graph_model(const CoocGraph& graph, const RunConfig& cfg, std::uint64_t data_seed,
                                   GcnTrainLog& log) {
  const auto dims = cfg.gcn_dims();
  auto model = init_model_for_vocab<double>(graph.vocab(), dims, cfg.seed);
  if (graph.num_edges() == 0) return model;
  const auto data = make_edge_dataset(graph, cfg.neg_ratio, data_seed);
  auto [trained, train_log] = train_gcn(std::move(model), graph, data, cfg.gcn_options(data_seed));
  log = std::move(train_log);
  return std::move(trained);
}

}  // namespace

GraphFeatures document_graph_features(const Document& doc, const RunConfig& cfg, std::uint64_t seed) {
  GraphFeatures f;
  f.graph = build_graph(doc.tokens, cfg.window);
  f.model = train_graph_model(f.graph, cfg, seed, f.log);
  f.node_embeddings = forward(f.model, f.graph);
  f.token_embeddings = gather_token_rows(f.graph, f.node_embeddings, doc.tokens);
  return f;
}

GraphStage run_graph_stage(const std::vector<const Document*>& docs, const RunConfig& cfg) {
  GraphStage stage;
  stage.token_embeddings.resize(docs.size());
  if (!cfg.use_graph) {
    for (std::size_t i = 0; i < docs.size(); ++i)
      stage.token_embeddings[i] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs[i]->tokens.size()), cfg.gcn_dim);
    return stage;
  }

  if (cfg.graph_scope == GraphScope::kCorpus) {
    std::vector<std::vector<std::string>> seqs;
    for (const auto* d : docs) seqs.push_back(d->tokens);
    CoocGraph graph;
    try {
      graph = build_corpus_graph(seqs, cfg.window);
    } catch (const std::exception& e) {
      throw PipelineError("build-graph", "", e.what());
    }
    GcnTrainLog log;
    GcnModel<double> model;
    try {
      model = train_graph_model(graph, cfg, cfg.seed, log);
    } catch (const std::exception& e) {
      throw PipelineError("train-gcn", "", e.what());
    }
    const Eigen::MatrixXd z = forward(model, graph);
    for (std::size_t i = 0; i < docs.size(); ++i)
      stage.token_embeddings[i] = gather_token_rows(graph, z, docs[i]->tokens);
    stage.logs.emplace_back("<corpus>", std::move(log));
    stage.models.push_back(std::move(model));
    stage.graphs.push_back(std::move(graph));
    return stage;
  }

  std::vector<GraphFeatures> features(docs.size());
  parallel_for(docs.size(), cfg.threads, [&](std::size_t i) {
    const Document& d = *docs[i];
    try {
      features[i] = document_graph_features(d, cfg, document_seed(cfg.seed, d.id));
    } catch (const std::exception& e) {
      throw PipelineError("graph", d.id, e.what());
    }
  });
  for (std::size_t i = 0; i < docs.size(); ++i) {
    stage.token_embeddings[i] = std::move(features[i].token_embeddings);
    stage.logs.emplace_back(docs[i]->id, std::move(features[i].log));
    stage.models.push_back(std::move(features[i].model));
    stage.graphs.push_back(std::move(features[i].graph));
  }
  return stage;
}

std::vector<TaggedSequence<double>> make_sequences(const Document& doc, const Eigen::MatrixXd& z_tokens,
                                                   const EmbeddingMatrix& h, int chunk_limit, bool require_labels) {
  const std::size_t n = doc.tokens.size();
  if (static_cast<std::size_t>(z_tokens.rows()) != n || static_cast<std::size_t>(h.rows()) != n)
    throw ShapeError("document '" + doc.id + "': embeddings do not cover every token");
  if (require_labels && !doc.labels) throw Error("document '" + doc.id + "' is unlabeled");
  std::vector<TaggedSequence<double>> out;
  for (const Span& s : chunk_sequence(n, static_cast<std::size_t>(chunk_limit))) {
    const auto len = static_cast<Eigen::Index>(s.end - s.begin);
    const auto begin = static_cast<Eigen::Index>(s.begin);
    TaggedSequence<double> seq;
    seq.z = z_tokens.middleRows(begin, len);
    seq.h = h.middleRows(begin, len).cast<double>();
    if (doc.labels)
      seq.labels.assign(doc.labels->begin() + static_cast<std::ptrdiff_t>(s.begin),
                        doc.labels->begin() + static_cast<std::ptrdiff_t>(s.end));
    out.push_back(std::move(seq));
  }
  return out;
}

TagPrediction<double> predict_document(const TaggerModel<double>& model, const Eigen::MatrixXd& z_tokens,
                                       const EmbeddingMatrix& h, int chunk_limit) {
  TagPrediction<double> out;
  out.probs.resize(z_tokens.rows(), kNumTags);
  for (const Span& s : chunk_sequence(static_cast<std::size_t>(z_tokens.rows()), static_cast<std::size_t>(chunk_limit))) {
    const auto len = static_cast<Eigen::Index>(s.end - s.begin);
    const auto begin = static_cast<Eigen::Index>(s.begin);
    auto part = tag_forward(model, z_tokens.middleRows(begin, len), h.middleRows(begin, len));
    out.probs.middleRows(begin, len) = part.probs;
    out.labels.insert(out.labels.end(), part.labels.begin(), part.labels.end());
  }
  return out;
}

nlohmann::json prediction_json(const Document& doc, const TagPrediction<double>& pred) {
  auto rec = prediction_record(doc.id, decode_bio(doc.tokens, pred.labels, pred.probs));
  std::vector<std::string> tags;
  nlohmann::json probs = nlohmann::json::array();
  for (std::size_t t = 0; t < pred.labels.size(); ++t) {
    tags.emplace_back(1, tag_char(pred.labels[t]));
    const auto r = static_cast<Eigen::Index>(t);
    probs.push_back({pred.probs(r, 0), pred.probs(r, 1), pred.probs(r, 2)});
  }
  rec["tags"] = std::move(tags);
  rec["probs"] = std::move(probs);
  return rec;
}

PipelineResult run_pipeline(const RunConfig& cfg, const CorpusSplit& train, const CorpusSplit& valid,
                            const CorpusSplit& test) {
  cfg.validate();
  if (train.documents.empty()) throw PipelineError("load", "", "training split is empty");

  // Validation: the given split, else the last 10% of training documents.
  std::vector<const Document*> train_docs, valid_docs, test_docs;
  for (const auto& d : train.documents) train_docs.push_back(&d);
  for (const auto& d : valid.documents) valid_docs.push_back(&d);
  for (const auto& d : test.documents) test_docs.push_back(&d);
  if (valid_docs.empty() && train_docs.size() >= 2) {
    const std::size_t held = std::max<std::size_t>(1, train_docs.size() / 10);
    valid_docs.assign(train_docs.end() - static_cast<std::ptrdiff_t>(held), train_docs.end());
    train_docs.resize(train_docs.size() - held);
  }

  std::vector<const Document*> all = train_docs;
  all.insert(all.end(), valid_docs.begin(), valid_docs.end());
  all.insert(all.end(), test_docs.begin(), test_docs.end());
  for (const auto* d : all)
    if (d->tokens.empty()) throw PipelineError("load", d->id, "document has no tokens");

  const GraphStage graphs = run_graph_stage(all, cfg);

  std::unique_ptr<EmbeddingProvider> provider;
  try {
    provider = make_provider(cfg.embeddings, cfg.context_dim);
  } catch (const std::exception& e) {
    throw PipelineError("embed", "", e.what());
  }
  std::vector<EmbeddingMatrix> contextual(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      contextual[i] = embed_document(*provider, *all[i]).h;
    } catch (const std::exception& e) {
      throw PipelineError("embed", all[i]->id, e.what());
    }
  }

  std::vector<TaggedSequence<double>> train_seqs, valid_seqs;
  for (std::size_t i = 0; i < train_docs.size() + valid_docs.size(); ++i) {
    auto& target = i < train_docs.size() ? train_seqs : valid_seqs;
    try {
      auto seqs = make_sequences(*all[i], graphs.token_embeddings[i], contextual[i], cfg.chunk_limit, true);
      for (auto& s : seqs) target.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw PipelineError("train-tagger", all[i]->id, e.what());
    }
  }

  PipelineResult result;
  auto tagger = init_tagger<double>(cfg.gcn_dim, provider->dim(), cfg.proj_dim, mix_seed(cfg.seed, 0x544147ULL),
                                    cfg.use_graph);
  try {
    auto [trained, log] = train_tagger<double>(std::move(tagger), train_seqs, valid_seqs, cfg.tagger_options());
    result.tagger = std::move(trained);
    result.tagger_log = std::move(log);
  } catch (const std::exception& e) {
    throw PipelineError("train-tagger", "", e.what());
  }

  std::map<std::string, std::vector<std::string>> predicted;
  const std::size_t first_test = train_docs.size() + valid_docs.size();
  for (std::size_t i = first_test; i < all.size(); ++i) {
    try {
      const auto pred = predict_document(result.tagger, graphs.token_embeddings[i], contextual[i], cfg.chunk_limit);
      auto rec = prediction_json(*all[i], pred);
      std::vector<std::string> texts;
      for (const auto& p : rec.at("keyphrases")) texts.push_back(p.at("text").get<std::string>());
      predicted[all[i]->id] = std::move(texts);
      result.predictions.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw PipelineError("predict", all[i]->id, e.what());
    }
  }

  try {
    result.report = evaluate_corpus(test, predicted, parse_cutoff(cfg.k));
  } catch (const std::exception& e) {
    throw PipelineError("evaluate", "", e.what());
  }

  if (!cfg.out_dir.empty()) {
    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    const auto config = to_json(cfg);
    write_json(out / "config.json", config);
    write_jsonl(out / "predictions.jsonl", {{"config", config}}, result.predictions);
    auto report = to_json(result.report);
    report["config"] = config;
    report["no_graph"] = !cfg.use_graph;
    write_json(out / "report.json", report);
    save_tagger(out / "tagger.tag", result.tagger);
    write_json(out / "tagger.tag.json", {{"config", config}, {"log", to_json(result.tagger_log)}});
    nlohmann::json gcn_logs = nlohmann::json::object();
    for (const auto& [id, log] : graphs.logs) gcn_logs[id] = to_json(log);
    write_json(out / "gcn_logs.json", {{"config", config}, {"documents", std::move(gcn_logs)}});
  }
  return result;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  auto load = [](const std::string& path, SplitName name, const char* stage) {
    try {
      return load_corpus(path, CorpusFormat::kJsonl, name);
    } catch (const std::exception& e) {
      throw PipelineError(stage, "", e.what());
    }
  };
  if (cfg.train_path.empty() || cfg.test_path.empty()) throw PipelineError("load", "", "train and test corpora are required");
  const CorpusSplit train = load(cfg.train_path, SplitName::kTrain, "load");
  const CorpusSplit valid = cfg.valid_path.empty() ? CorpusSplit{SplitName::kValidation, {}}
                                                   : load(cfg.valid_path, SplitName::kValidation, "load");
  const CorpusSplit test = load(cfg.test_path, SplitName::kTest, "load");
  return run_pipeline(cfg, train, valid, test);
}

void write_jsonl(const std::filesystem::path& path, const nlohmann::json& header,
                 const std::vector<nlohmann::json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (!header.is_null()) out << header.dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace kpe
