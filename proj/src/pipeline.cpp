// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "error.hpp"
#include "log.hpp"
#include "parallel.hpp"

namespace genret {

namespace {

std::string JoinWords(std::span<const std::string> words) {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<TokenId> Framed(const Vocabulary& vocab, const std::string& text) {
  return Encode(vocab, text, true);
}

std::vector<TokenId> Target(const Vocabulary& vocab, const std::string& text) {
  std::vector<TokenId> t = Encode(vocab, text, false);
  t.push_back(kEos);
  return t;
}

bool IsBackendError(const Error& e) {
  return e.code() == ErrorCode::kBackendTransport ||
         e.code() == ErrorCode::kBackendRequest ||
         e.code() == ErrorCode::kBackendProtocol;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double Mean(double sum, int count) { return count == 0 ? 0.0 : sum / count; }

}  // namespace

std::vector<PseudoPair> GenPseudoData(const Corpus& corpus, int k,
                                      GenBackend& backend, std::uint64_t seed,
                                      int max_input_len, int jobs) {
  Require(k >= 1, "pseudo.k must be >= 1");
  const auto& docs = corpus.documents();
  std::vector<std::vector<PseudoPair>> per_doc(docs.size());
  ParallelFor(docs.size(), jobs, [&](std::size_t i) {
    const Document& doc = docs[i];
    const std::string full = doc.FullText();
    const std::vector<std::string> doc_words = NormalizeWords(full);
    for (int j = 0; j < k; ++j) {
      GenRequest q;
      q.kind = PromptKind::kPseudoQuery;
      q.prompt = PromptTemplate::For(q.kind).Render({{"d", full}});
      q.doc = &doc;
      q.seed = seed;
      q.index = j;
      PseudoPair pair;
      pair.doc_id = doc.doc_id;
      try {
        pair.pseudo_query = backend.Generate(q);
        GenRequest a;
        a.kind = PromptKind::kPseudoAnswer;
        a.prompt = PromptTemplate::For(a.kind).Render(
            {{"d", full}, {"q", pair.pseudo_query}});
        a.doc = &doc;
        a.query = pair.pseudo_query;
        pair.pseudo_answer = backend.Generate(a);
      } catch (const Error& e) {
        Fail(e.code(), "pseudo pair " + std::to_string(j) + " for '" +
                           doc.doc_id + "': " + e.what());
      }
      if (NormalizeWords(pair.pseudo_query).empty() ||
          NormalizeWords(pair.pseudo_answer).empty())
        Fail(ErrorCode::kBackendProtocol,
             "empty pseudo query or answer for '" + doc.doc_id + "'");
      // BOS, the query, the separator and EOS leave this many document words.
      const int budget = max_input_len - 3 -
                         static_cast<int>(NormalizeWords(pair.pseudo_query).size());
      const std::size_t keep =
          std::min(doc_words.size(), static_cast<std::size_t>(std::max(budget, 0)));
      pair.input_text = pair.pseudo_query + " " + kContextSeparator + " " +
                        JoinWords(std::span(doc_words).first(keep));
      per_doc[i].push_back(std::move(pair));
    }
  });
  std::vector<PseudoPair> out;
  out.reserve(docs.size() * static_cast<std::size_t>(k));
  for (auto& v : per_doc)
    for (auto& p : v) out.push_back(std::move(p));
  return out;
}

void SavePseudo(const std::filesystem::path& path,
                std::span<const PseudoPair> pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const PseudoPair& p : pairs)
    rows.push_back({{"doc_id", p.doc_id},
                    {"pseudo_query", p.pseudo_query},
                    {"pseudo_answer", p.pseudo_answer},
                    {"input_text", p.input_text}});
  WriteJsonLines(path, rows);
}

std::vector<PseudoPair> LoadPseudo(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    Fail(ErrorCode::kIo, "pseudo file not found: " + path.string());
  std::vector<PseudoPair> out;
  ReadJsonLines(path, [&](const Json& j, std::size_t) {
    out.push_back({RequireString(j, "doc_id"), RequireString(j, "pseudo_query"),
                   RequireString(j, "pseudo_answer"), RequireString(j, "input_text")});
  });
  return out;
}

std::map<std::string, std::string> DocidTexts(const Corpus& corpus,
                                              bool use_d_connector,
                                              int docid_words) {
  Require(docid_words >= 1, "docid_words must be >= 1");
  std::map<std::string, std::string> texts;
  for (const Document& doc : corpus.documents()) {
    if (use_d_connector) {
      auto it = corpus.d_connectors().find(doc.doc_id);
      if (it == corpus.d_connectors().end())
        Fail(ErrorCode::kNotFound, "no D-Connector for '" + doc.doc_id + "'");
      texts[doc.doc_id] = it->second;
    } else {
      std::vector<std::string> words = NormalizeWords(doc.text);
      words.resize(std::min(words.size(), static_cast<std::size_t>(docid_words)));
      texts[doc.doc_id] =
          (doc.title ? NormalizeText(*doc.title) + " " : std::string()) + JoinWords(words);
    }
  }
  return Disambiguate(texts);
}

Vocabulary BuildPipelineVocab(const Corpus& corpus,
                              const std::map<std::string, std::string>& docid_texts,
                              std::span<const QueryRecord> queries,
                              std::span<const PseudoPair> pseudo, int min_freq,
                              int max_size) {
  std::vector<std::string> texts = {kContextSeparator};
  for (const Document& d : corpus.documents()) texts.push_back(d.FullText());
  for (const auto& [id, t] : docid_texts) texts.push_back(t);
  for (const QueryRecord& q : queries) {
    texts.push_back(q.query);
    if (q.answer) texts.push_back(*q.answer);
    if (q.q_connector) texts.push_back(*q.q_connector);
  }
  for (const PseudoPair& p : pseudo) {
    texts.push_back(p.pseudo_query);
    texts.push_back(p.pseudo_answer);
  }
  return Vocabulary::Build(texts, static_cast<std::size_t>(min_freq),
                           static_cast<std::size_t>(max_size));
}

DocidMap DocidsFromTrie(const DocidTrie& trie) {
  DocidMap out;
  for (DocidSequence& s : trie.Sequences()) out[s.doc_id] = std::move(s.tokens);
  return out;
}

const char* StageName(Stage stage) {
  return stage == Stage::kPretrain ? "pretrain" : "finetune";
}

std::vector<TrainItem> PretrainItems(std::span<const PseudoPair> pairs,
                                     const DocidMap& docids,
                                     const Vocabulary& vocab) {
  std::vector<TrainItem> items;
  items.reserve(pairs.size());
  for (const PseudoPair& p : pairs) {
    auto it = docids.find(p.doc_id);
    if (it == docids.end())
      Fail(ErrorCode::kNotFound, "pseudo pair for '" + p.doc_id + "' has no identifier");
    TrainItem item;
    item.example.input = Framed(vocab, p.input_text);
    item.example.docid_target = it->second;
    item.example.answer_target = Target(vocab, p.pseudo_answer);
    if (item.example.answer_target.size() < 2)
      Fail(ErrorCode::kInvalidArgument, "empty pseudo answer for '" + p.doc_id + "'");
    item.stage = Stage::kPretrain;
    item.source = p.doc_id;
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<TrainItem> FinetuneItems(std::span<const QueryRecord> queries,
                                     const DocidMap& docids,
                                     const Vocabulary& vocab,
                                     bool use_q_connector,
                                     std::vector<SkippedQuery>* skipped) {
  std::vector<TrainItem> items;
  auto skip = [&](const QueryRecord& q, std::string reason) {
    if (skipped) skipped->push_back({q.query_id, std::move(reason)});
  };
  for (const QueryRecord& q : queries) {
    if (use_q_connector && !q.q_connector) {
      skip(q, "missing q_connector");
      continue;
    }
    if (!q.answer || NormalizeWords(*q.answer).empty()) {
      skip(q, "missing answer");
      continue;
    }
    if (q.relevant_doc_ids.empty()) {
      skip(q, "no relevant document");
      continue;
    }
    const auto missing = std::find_if(
        q.relevant_doc_ids.begin(), q.relevant_doc_ids.end(),
        [&](const std::string& id) { return !docids.contains(id); });
    if (missing != q.relevant_doc_ids.end()) {
      skip(q, "relevant document '" + *missing + "' has no identifier");
      continue;
    }
    const std::vector<TokenId> input =
        Framed(vocab, use_q_connector ? *q.q_connector : q.query);
    const std::vector<TokenId> answer = Target(vocab, *q.answer);
    for (const std::string& id : q.relevant_doc_ids)
      items.push_back({{input, docids.at(id), answer}, Stage::kFinetune, q.query_id});
  }
  return items;
}

std::vector<StepLosses> TrainStage(Model& model, std::span<const TrainItem> items,
                                   Stage stage, const StageOptions& options) {
  if (items.empty())
    Fail(ErrorCode::kInvalidArgument,
         std::string("empty training set for ") + StageName(stage));
  Require(options.epochs >= 0, "epochs must be >= 0");
  for (const TrainItem& item : items)
    if (item.stage != stage && !options.allow_mixed)
      Fail(ErrorCode::kState, std::string(StageName(item.stage)) + " item '" +
                                  item.source + "' in " + StageName(stage) + " stage");
  options.train.Validate();

  Trainer trainer(model, options.train);
  std::vector<StepLosses> log;
  std::vector<std::size_t> order(items.size());
  const auto batch_size = static_cast<std::size_t>(options.train.batch_size);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double joint = 0.0;
    int batches = 0;
    std::vector<TrainExample> batch;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i)
        batch.push_back(items[order[i]].example);
      log.push_back(trainer.Step(batch));
      joint += log.back().joint;
      ++batches;
    }
    Log(LogLevel::kInfo, std::string(StageName(stage)) + " epoch " +
                             std::to_string(epoch) + "/" +
                             std::to_string(options.epochs) +
                             " mean joint loss " + Fixed(joint / batches));
    if (options.on_epoch) options.on_epoch(epoch);
  }
  return log;
}

void WriteLossCsv(const std::filesystem::path& path,
                  std::span<const StepLosses> steps) {
  std::ostringstream out;
  out << "step,loss_retr,loss_qa,loss_joint\n";
  char buf[128];
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", i + 1,
                  steps[i].retrieval, steps[i].qa, steps[i].joint);
    out << buf;
  }
  WriteFileAtomic(path, out.str());
}

Engine::Engine(const Model& model, const DocidTrie& trie, const Vocabulary& vocab,
               const Corpus& corpus, InferenceOptions options)
    : model_(model), trie_(trie), vocab_(vocab), corpus_(corpus),
      options_(std::move(options)) {
  Require(static_cast<int>(vocab.size()) == model.config().vocab_size,
          "vocabulary size does not match the model");
}

IterState Engine::Round(int round, const std::string& input_text) const {
  std::vector<TokenId> input = Framed(vocab_, input_text);
  const auto limit = static_cast<std::size_t>(model_.config().max_input_len);
  if (input.size() > limit) {
    // Long iteration connectors are expected; keep the head and the EOS.
    input.resize(limit);
    input.back() = kEos;
  }
  const EncoderState state = model_.Encode(input);
  IterState s;
  s.round = round;
  s.q_connector = input_text;
  s.ranking = ConstrainedBeamSearch(model_, state, trie_, options_.beam);
  if (options_.answer)
    s.answer = Decode(vocab_, GreedyDecode(model_, Head::kQa, state,
                                           options_.max_answer_len));
  return s;
}

IterState Engine::RunBase(const QueryRecord& query, GenBackend& backend) const {
  if (!options_.use_q_connector) return Round(0, query.query);
  if (query.q_connector) return Round(0, *query.q_connector);
  return Round(0, GenQConnector(query.query, options_.connector_n, backend));
}

IterOutcome Engine::RunIter(const QueryRecord& query, GenBackend& backend,
                            int iterations) const {
  Require(iterations >= 0, "iterations must be >= 0");
  IterOutcome out;
  try {
    out.rounds.push_back(RunBase(query, backend));
    for (int r = 1; r <= iterations; ++r) {
      const IterState& prev = out.rounds.back();
      std::vector<const Document*> docs;
      for (const RetrievedDoc& d : prev.ranking) {
        if (static_cast<int>(docs.size()) >= options_.iter.k_docs) break;
        docs.push_back(&corpus_.Get(d.doc_id));
      }
      const std::string connector =
          GenIterQConnector(query.query, docs, prev.answer, options_.iter, backend);
      out.rounds.push_back(Round(r, connector));
    }
  } catch (const Error& e) {
    if (!IsBackendError(e)) throw;
    out.partial = true;
    out.error = e.what();
    Log(LogLevel::kWarning, "query '" + query.query_id + "' stopped after " +
                                std::to_string(out.rounds.size()) +
                                " round(s): " + e.what());
  }
  return out;
}

std::vector<IterOutcome> RunQueries(const Engine& engine,
                                    std::span<const QueryRecord> queries,
                                    GenBackend& backend, int iterations,
                                    int jobs) {
  std::vector<IterOutcome> out(queries.size());
  ParallelFor(queries.size(), jobs, [&](std::size_t i) {
    out[i] = engine.RunIter(queries[i], backend, iterations);
  });
  return out;
}

Run RoundRun(std::span<const QueryRecord> queries,
             std::span<const IterOutcome> outcomes, int round, bool answers,
             bool length_normalize) {
  Require(queries.size() == outcomes.size(), "queries and outcomes differ in size");
  Run run;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (static_cast<int>(outcomes[i].rounds.size()) <= round) continue;
    const IterState& s = outcomes[i].rounds[static_cast<std::size_t>(round)];
    RunEntry e;
    e.query_id = queries[i].query_id;
    for (const RetrievedDoc& d : s.ranking) {
      const double score = length_normalize
                               ? d.log_score / static_cast<double>(d.tokens.size())
                               : d.log_score;
      e.ranking.push_back({d.doc_id, score});
    }
    if (answers) e.answer = s.answer;
    run.entries.push_back(std::move(e));
  }
  return run;
}

Json EvaluateRun(const Run& run, std::span<const QueryRecord> gold,
                 const metrics::MetricConfig& config, const std::string& run_id,
                 const std::string& config_hash) {
  config.Validate();
  if (run.entries.empty()) Fail(ErrorCode::kInvalidArgument, "empty run");
  std::map<std::string, const QueryRecord*> by_id;
  for (const QueryRecord& q : gold) by_id[q.query_id] = &q;

  constexpr int kMrrCutoff = 10;
  double rr_sum = 0.0, bleu_sum = 0.0, rouge_sum = 0.0, em_sum = 0.0, f1_sum = 0.0;
  std::vector<double> recall_sum(config.k_values.size(), 0.0);
  int retrieval_n = 0, qa_n = 0;
  Json per_query = Json::array();
  std::set<std::string> seen;
  for (const RunEntry& e : run.entries) {
    auto it = by_id.find(e.query_id);
    if (it == by_id.end())
      Fail(ErrorCode::kNotFound, "unknown query_id '" + e.query_id + "' in run");
    if (!seen.insert(e.query_id).second)
      Fail(ErrorCode::kDuplicate, "query_id '" + e.query_id + "' repeated in run");
    const QueryRecord& q = *it->second;
    Json row = {{"query_id", e.query_id}};
    if (!q.relevant_doc_ids.empty()) {
      const std::set<std::string> relevant(q.relevant_doc_ids.begin(),
                                           q.relevant_doc_ids.end());
      std::vector<std::string> ids;
      for (const RankedDoc& d : e.ranking) ids.push_back(d.doc_id);
      Json rank = nullptr;
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (relevant.contains(ids[i])) {
          rank = i + 1;
          break;
        }
      const double rr = metrics::ReciprocalRankAtK(ids, relevant, kMrrCutoff);
      Json hits = Json::object();
      for (std::size_t k = 0; k < config.k_values.size(); ++k) {
        const double r = metrics::RecallAtK(ids, relevant, config.k_values[k]);
        hits["r@" + std::to_string(config.k_values[k])] = r;
        recall_sum[k] += r;
      }
      row["rank_of_gold"] = rank;
      row["rr"] = rr;
      row["recall_hits"] = hits;
      rr_sum += rr;
      ++retrieval_n;
    } else {
      row["rank_of_gold"] = nullptr;
      row["rr"] = nullptr;
      row["recall_hits"] = nullptr;
    }
    if (q.answer) {
      const std::string pred = e.answer.value_or("");
      const std::vector<std::string> golds = {*q.answer};
      const double b = metrics::Bleu1(pred, golds);
      const double r = metrics::RougeL(pred, *q.answer, config.rouge_beta);
      const int em = metrics::ExactMatch(pred, golds);
      const double f1 = metrics::TokenF1(pred, golds);
      row["bleu1"] = b;
      row["rouge_l"] = r;
      row["em"] = em;
      row["f1"] = f1;
      bleu_sum += b;
      rouge_sum += r;
      em_sum += em;
      f1_sum += f1;
      ++qa_n;
    } else {
      row["bleu1"] = row["rouge_l"] = row["em"] = row["f1"] = nullptr;
    }
    per_query.push_back(std::move(row));
  }
  Json aggregate = {{"mrr@10", Mean(rr_sum, retrieval_n)},
                    {"bleu1", Mean(bleu_sum, qa_n)},
                    {"rouge_l", Mean(rouge_sum, qa_n)},
                    {"em", Mean(em_sum, qa_n)},
                    {"f1", Mean(f1_sum, qa_n)}};
  for (std::size_t k = 0; k < config.k_values.size(); ++k)
    aggregate["r@" + std::to_string(config.k_values[k])] = Mean(recall_sum[k], retrieval_n);
  return {{"run_id", run_id},
          {"config_hash", config_hash},
          {"counts", {{"queries", run.entries.size()},
                      {"retrieval", retrieval_n},
                      {"qa", qa_n}}},
          {"per_query", per_query},
          {"aggregate", aggregate}};
}

std::pair<double, double> CurvePoint(const Json& report,
                                     const metrics::MetricConfig& config) {
  const Json& a = report.at("aggregate");
  return {a.at("mrr@10").get<double>(), a.at(config.qa_metric).get<double>()};
}

std::unique_ptr<GenBackend> MakeBackend(const RunConfig& config,
                                        const Corpus& corpus,
                                        std::span<const QueryRecord> queries) {
  if (config.backend == "stub") return std::make_unique<StubBackend>();
  if (config.backend == "stub-oracle") {
    std::map<std::string, std::string> gold;
    for (const QueryRecord& q : queries)
      if (!q.relevant_doc_ids.empty())
        if (const Document* d = corpus.Find(q.relevant_doc_ids.front()))
          gold.emplace(q.query, d->FullText());
    return std::make_unique<GoldInjectingStub>(std::move(gold));
  }
  HttpConfig http = config.http;
  if (http.cache_dir.empty()) http.cache_dir = config.OutputDir() / "llm_cache";
  return std::make_unique<HttpBackend>(std::move(http));
}

namespace stages {

namespace {

void Prepare(const RunConfig& config) {
  std::filesystem::create_directories(config.OutputDir());
  WriteFileAtomic(Artifact(config, "config.json"), config.ToJson().dump(2) + "\n");
}

std::filesystem::path Choose(const std::string& explicit_path,
                             const RunConfig& config, const std::string& name) {
  return explicit_path.empty() ? Artifact(config, name)
                               : std::filesystem::path(explicit_path);
}

Corpus LoadDocuments(const RunConfig& config, bool with_connectors) {
  if (config.paths.documents.empty())
    Fail(ErrorCode::kInvalidArgument, "paths.documents is not set");
  Corpus corpus = LoadCorpus(config.paths.documents);
  if (with_connectors) {
    const auto path = Choose(config.paths.connectors, config, "d_connectors.jsonl");
    if (std::filesystem::exists(path))
      LoadConnectors(path, corpus);
    else if (config.use_d_connector)
      Fail(ErrorCode::kNotFound,
           "D-Connectors not found at " + path.string() + " (run gen-connectors)");
  }
  return corpus;
}

// Prefers the copy written by gen-connectors when it holds the same queries
// as the configured file.
std::vector<QueryRecord> LoadQueriesOrEmpty(const std::filesystem::path& generated,
                                            const std::string& raw,
                                            const Corpus& corpus) {
  const bool have_generated = std::filesystem::exists(generated);
  if (raw.empty())
    return have_generated ? LoadQueries(generated, &corpus) : std::vector<QueryRecord>{};
  std::vector<QueryRecord> queries = LoadQueries(raw, &corpus);
  if (!have_generated) return queries;
  std::vector<QueryRecord> filled = LoadQueries(generated, &corpus);
  auto ids = [](const std::vector<QueryRecord>& q) {
    std::vector<std::string> out;
    for (const QueryRecord& r : q) out.push_back(r.query_id);
    return out;
  };
  return ids(filled) == ids(queries) ? filled : queries;
}

std::vector<QueryRecord> TrainQueries(const RunConfig& config, const Corpus& corpus) {
  return LoadQueriesOrEmpty(Artifact(config, "queries.jsonl"), config.paths.queries,
                            corpus);
}

std::vector<QueryRecord> EvalQueries(const RunConfig& config, const Corpus& corpus) {
  std::vector<QueryRecord> q = LoadQueriesOrEmpty(
      Artifact(config, "eval_queries.jsonl"), config.paths.eval_queries, corpus);
  if (q.empty()) q = TrainQueries(config, corpus);
  if (q.empty()) Fail(ErrorCode::kInvalidArgument, "no evaluation queries configured");
  return q;
}

Vocabulary LoadVocab(const RunConfig& config) {
  return Vocabulary::Load(Choose(config.paths.vocab, config, "vocab.jsonl"));
}

DocidTrie LoadTrie(const RunConfig& config) {
  return DocidTrie::Load(Choose(config.paths.trie, config, "trie.jsonl"));
}

Model LoadModelChecked(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::uint64_t hash = 0;
  Model model = Model::Load(path, &hash);
  if (hash != vocab.Hash())
    Fail(ErrorCode::kState, "checkpoint " + path.string() +
                                " was trained with a different vocabulary");
  return model;
}

InferenceOptions InferenceFor(const RunConfig& config, bool answers) {
  InferenceOptions o;
  o.beam = config.beam;
  o.max_answer_len = config.max_answer_len;
  o.use_q_connector = config.use_q_connector;
  o.answer = answers;
  o.connector_n = config.connector_n;
  o.iter = config.iter;
  return o;
}

StageOptions StageFor(const RunConfig& config, int epochs, std::uint64_t salt) {
  StageOptions o;
  o.train = config.train;
  o.epochs = epochs;
  o.seed = config.seed + salt;
  o.train.seed = o.seed;
  return o;
}

void WriteReport(const Json& report, const std::filesystem::path& path) {
  WriteFileAtomic(path, report.dump(2) + "\n");
  const Json& a = report.at("aggregate");
  std::string header = "run_id", row = report.at("run_id").get<std::string>();
  for (const auto& [key, value] : a.items()) {
    header += "," + key;
    row += "," + Fixed(value.get<double>());
  }
  auto csv = path;
  csv.replace_extension(".csv");
  WriteFileAtomic(csv, header + "\n" + row + "\n");
}

}  // namespace

std::filesystem::path Artifact(const RunConfig& config, const std::string& name) {
  return config.OutputDir() / name;
}

void GenConnectors(const RunConfig& config, ConnectorKinds kinds) {
  Prepare(config);
  const Corpus corpus = LoadDocuments(config, false);
  std::vector<QueryRecord> train =
      config.paths.queries.empty() ? std::vector<QueryRecord>{}
                                   : LoadQueries(config.paths.queries, &corpus);
  std::vector<QueryRecord> eval =
      config.paths.eval_queries.empty() ? std::vector<QueryRecord>{}
                                        : LoadQueries(config.paths.eval_queries, &corpus);
  std::vector<QueryRecord> all = train;
  all.insert(all.end(), eval.begin(), eval.end());
  auto backend = MakeBackend(config, corpus, all);

  if (kinds.documents) {
    const auto& docs = corpus.documents();
    std::vector<std::string> texts(docs.size());
    ParallelFor(docs.size(), config.jobs, [&](std::size_t i) {
      texts[i] = GenDConnector(docs[i], config.connector_m, *backend,
                               config.connector_max_prompt_words);
    });
    std::map<std::string, std::string> connectors;
    for (std::size_t i = 0; i < docs.size(); ++i) connectors[docs[i].doc_id] = texts[i];
    SaveConnectors(Artifact(config, "d_connectors.jsonl"), connectors);
    Log(LogLevel::kInfo, "wrote " + std::to_string(connectors.size()) + " D-Connectors");
  }
  if (kinds.queries) {
    auto fill = [&](std::vector<QueryRecord>& queries, const std::string& name) {
      ParallelFor(queries.size(), config.jobs, [&](std::size_t i) {
        if (!queries[i].q_connector)
          queries[i].q_connector =
              GenQConnector(queries[i].query, config.connector_n, *backend);
      });
      SaveQueries(Artifact(config, name), queries);
      Log(LogLevel::kInfo, "wrote " + std::to_string(queries.size()) +
                               " Q-Connectors to " + name);
    };
    if (!config.paths.queries.empty()) fill(train, "queries.jsonl");
    if (!config.paths.eval_queries.empty()) fill(eval, "eval_queries.jsonl");
  }
}

void GenPseudo(const RunConfig& config) {
  Prepare(config);
  const Corpus corpus = LoadDocuments(config, false);
  auto backend = MakeBackend(config, corpus, {});
  const std::vector<PseudoPair> pairs =
      GenPseudoData(corpus, config.pseudo_k, *backend, config.seed,
                    config.model.max_input_len, config.jobs);
  SavePseudo(Artifact(config, "pseudo.jsonl"), pairs);
  Log(LogLevel::kInfo, "wrote " + std::to_string(pairs.size()) + " pseudo pairs");
}

void BuildTrie(const RunConfig& config) {
  Prepare(config);
  const Corpus corpus = LoadDocuments(config, config.use_d_connector);
  const std::map<std::string, std::string> docid_texts =
      DocidTexts(corpus, config.use_d_connector, config.docid_words);
  std::vector<Json> rows;
  for (const auto& [id, text] : docid_texts) rows.push_back({{"doc_id", id}, {"docid", text}});
  WriteJsonLines(Artifact(config, "docids.jsonl"), rows);

  const std::vector<QueryRecord> train = TrainQueries(config, corpus);
  const auto pseudo_path = Choose(config.paths.pseudo, config, "pseudo.jsonl");
  const std::vector<PseudoPair> pseudo = std::filesystem::exists(pseudo_path)
                                             ? LoadPseudo(pseudo_path)
                                             : std::vector<PseudoPair>{};
  const Vocabulary vocab = BuildPipelineVocab(corpus, docid_texts, train, pseudo,
                                              config.vocab_min_freq, config.vocab_max_size);
  vocab.Save(Artifact(config, "vocab.jsonl"));
  const DocidTrie trie = DocidTrie::Build(TokenizeDocids(docid_texts, vocab));
  trie.Save(Artifact(config, "trie.jsonl"));
  Log(LogLevel::kInfo, "vocabulary of " + std::to_string(vocab.size()) +
                           " tokens; trie of " + std::to_string(trie.node_count()) +
                           " nodes over " + std::to_string(trie.sequence_count()) +
                           " identifiers");
}

void Pretrain(const RunConfig& config) {
  Prepare(config);
  const Vocabulary vocab = LoadVocab(config);
  const DocidTrie trie = LoadTrie(config);
  const std::vector<PseudoPair> pseudo =
      LoadPseudo(Choose(config.paths.pseudo, config, "pseudo.jsonl"));
  if (pseudo.empty()) Fail(ErrorCode::kInvalidArgument, "no pseudo pairs to pretrain on");
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  Model model = Model::Init(mc);
  std::vector<StepLosses> log;
  if (config.pretrain_epochs > 0) {
    const std::vector<TrainItem> items = PretrainItems(pseudo, DocidsFromTrie(trie), vocab);
    log = TrainStage(model, items, Stage::kPretrain, StageFor(config, config.pretrain_epochs, 1));
  }
  WriteLossCsv(Artifact(config, "pretrain_log.csv"), log);
  model.Save(Artifact(config, "model_pretrain.bin"), vocab.Hash());
}

void Finetune(const RunConfig& config) {
  Prepare(config);
  const Corpus corpus = LoadDocuments(config, false);
  const Vocabulary vocab = LoadVocab(config);
  const DocidTrie trie = LoadTrie(config);
  Model model = LoadModelChecked(Artifact(config, "model_pretrain.bin"), vocab);
  const DocidMap docids = DocidsFromTrie(trie);

  std::vector<SkippedQuery> skipped;
  std::vector<TrainItem> items = FinetuneItems(TrainQueries(config, corpus), docids,
                                               vocab, config.use_q_connector, &skipped);
  Json skip_rows = Json::array();
  for (const SkippedQuery& s : skipped)
    skip_rows.push_back({{"query_id", s.query_id}, {"reason", s.reason}});
  WriteFileAtomic(Artifact(config, "skip_report.json"),
                  Json{{"skipped", skip_rows}}.dump(2) + "\n");
  if (!skipped.empty())
    Log(LogLevel::kWarning, std::to_string(skipped.size()) +
                                " labeled queries skipped (see skip_report.json)");
  if (items.empty())
    Fail(ErrorCode::kInvalidArgument, "empty training set for finetune: every "
                                      "labeled query was skipped");
  StageOptions options = StageFor(config, config.finetune_epochs, 2);
  if (config.mix_stages) {
    const auto pseudo_path = Choose(config.paths.pseudo, config, "pseudo.jsonl");
    const std::vector<TrainItem> extra =
        PretrainItems(LoadPseudo(pseudo_path), docids, vocab);
    items.insert(items.end(), extra.begin(), extra.end());
    options.allow_mixed = true;
  }

  std::vector<Json> epoch_rows;
  std::vector<QueryRecord> eval;
  std::unique_ptr<GenBackend> backend;
  if (config.eval_every > 0) {
    eval = EvalQueries(config, corpus);
    backend = MakeBackend(config, corpus, eval);
    options.on_epoch = [&](int epoch) {
      if (epoch % config.eval_every != 0 && epoch != config.finetune_epochs) return;
      const Engine engine(model, trie, vocab, corpus, InferenceFor(config, true));
      const auto outcomes = RunQueries(engine, eval, *backend, 0, config.jobs);
      const Json report =
          EvaluateRun(RoundRun(eval, outcomes, 0, true, config.beam.length_normalize),
                      eval, config.metrics, "epoch" + std::to_string(epoch), config.Hash());
      const auto [mrr, qa] = CurvePoint(report, config.metrics);
      epoch_rows.push_back({{"epoch", epoch}, {"mrr10", mrr}, {"qa_metric", qa}});
      Log(LogLevel::kInfo, "epoch " + std::to_string(epoch) + " held-out MRR@10 " +
                               Fixed(mrr) + " " + config.metrics.qa_metric + " " + Fixed(qa));
    };
  }
  const std::vector<StepLosses> log = TrainStage(model, items, Stage::kFinetune, options);
  WriteLossCsv(Artifact(config, "finetune_log.csv"), log);
  if (!epoch_rows.empty()) WriteJsonLines(Artifact(config, "epoch_metrics.jsonl"), epoch_rows);
  model.Save(Artifact(config, "model.bin"), vocab.Hash());
}

namespace {

struct InferenceInputs {
  Corpus corpus;
  Vocabulary vocab;
  DocidTrie trie;
  std::vector<QueryRecord> queries;
};

InferenceInputs LoadInference(const RunConfig& config) {
  InferenceInputs in{LoadDocuments(config, false), LoadVocab(config), LoadTrie(config), {}};
  in.queries = EvalQueries(config, in.corpus);
  return in;
}

}  // namespace

void Retrieve(const RunConfig& config, bool answers) {
  Prepare(config);
  const InferenceInputs in = LoadInference(config);
  const Model model = LoadModelChecked(Choose(config.paths.model, config, "model.bin"), in.vocab);
  auto backend = MakeBackend(config, in.corpus, in.queries);
  const Engine engine(model, in.trie, in.vocab, in.corpus, InferenceFor(config, answers));
  const auto outcomes = RunQueries(engine, in.queries, *backend, 0, config.jobs);
  WriteRun(Artifact(config, "run.jsonl"),
           RoundRun(in.queries, outcomes, 0, answers, config.beam.length_normalize));
}

void RunIter(const RunConfig& config) {
  Prepare(config);
  const InferenceInputs in = LoadInference(config);
  const Model model = LoadModelChecked(Choose(config.paths.model, config, "model.bin"), in.vocab);
  auto backend = MakeBackend(config, in.corpus, in.queries);
  const Engine engine(model, in.trie, in.vocab, in.corpus, InferenceFor(config, true));
  const auto outcomes = RunQueries(engine, in.queries, *backend, config.iterations, config.jobs);
  for (int r = 0; r <= config.iterations; ++r) {
    const Run run = RoundRun(in.queries, outcomes, r, true, config.beam.length_normalize);
    WriteRun(Artifact(config, "run_round" + std::to_string(r) + ".jsonl"), run);
    if (r == config.iterations) WriteRun(Artifact(config, "run.jsonl"), run);
  }
  std::vector<Json> status;
  int partial = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    Json row = {{"query_id", in.queries[i].query_id},
                {"rounds", outcomes[i].rounds.size()},
                {"partial", outcomes[i].partial}};
    if (outcomes[i].partial) {
      row["error"] = outcomes[i].error;
      ++partial;
    }
    status.push_back(std::move(row));
  }
  WriteJsonLines(Artifact(config, "iter_status.jsonl"), status);
  if (partial > 0)
    Log(LogLevel::kWarning, std::to_string(partial) +
                                " queries have partial iteration results (see iter_status.jsonl)");
}

Json Evaluate(const RunConfig& config, const std::filesystem::path& run_path,
              const std::filesystem::path& queries_path,
              const std::filesystem::path& report_path) {
  const auto run_file = run_path.empty() ? Artifact(config, "run.jsonl") : run_path;
  std::vector<QueryRecord> gold;
  if (!queries_path.empty()) {
    gold = LoadQueries(queries_path);
  } else {
    const Corpus corpus = LoadDocuments(config, false);
    gold = EvalQueries(config, corpus);
  }
  const Json report = EvaluateRun(ReadRun(run_file), gold, config.metrics,
                                  run_file.stem().string(), config.Hash());
  const auto out = report_path.empty() ? Artifact(config, "report.json") : report_path;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  WriteReport(report, out);
  return report;
}

void Curves(const RunConfig& config) {
  bool wrote = false;
  std::string rows = "iteration,mrr10,qa_metric\n";
  for (int r = 0;; ++r) {
    const auto run = Artifact(config, "run_round" + std::to_string(r) + ".jsonl");
    if (!std::filesystem::exists(run)) break;
    const Json report =
        Evaluate(config, run, {}, Artifact(config, "report_round" + std::to_string(r) + ".json"));
    const auto [mrr, qa] = CurvePoint(report, config.metrics);
    rows += std::to_string(r) + "," + Fixed(mrr) + "," + Fixed(qa) + "\n";
    wrote = true;
  }
  if (wrote) WriteFileAtomic(Artifact(config, "curves_iteration.csv"), rows);

  const auto epochs = Artifact(config, "epoch_metrics.jsonl");
  if (std::filesystem::exists(epochs)) {
    std::string csv = "epoch,mrr10,qa_metric\n";
    ReadJsonLines(epochs, [&](const Json& j, std::size_t) {
      csv += std::to_string(j.at("epoch").get<int>()) + "," +
             Fixed(j.at("mrr10").get<double>()) + "," +
             Fixed(j.at("qa_metric").get<double>()) + "\n";
    });
    WriteFileAtomic(Artifact(config, "curves_epoch.csv"), csv);
    wrote = true;
  }
  if (!wrote)
    Fail(ErrorCode::kNotFound, "no round runs or epoch metrics in " +
                                   config.OutputDir().string() + " (run run-iter first)");
}

Json RunAll(const RunConfig& config) {
  GenConnectors(config, {});
  GenPseudo(config);
  BuildTrie(config);
  Pretrain(config);
  Finetune(config);
  RunIter(config);
  const Json report = Evaluate(config, {}, {}, {});
  Curves(config);
  return report;
}

void Compare(std::span<const std::string> labels,
             std::span<const std::filesystem::path> reports,
             const std::filesystem::path& out_json,
             const std::filesystem::path& out_csv) {
  Require(!reports.empty(), "compare needs at least one report");
  Require(labels.size() == reports.size(), "compare needs one label per report");
  static const char* kColumns[] = {"mrr@10", "r@1", "r@5", "r@10",
                                   "bleu1", "rouge_l", "em", "f1"};
  Json rows = Json::array();
  std::string csv = "label";
  for (const char* c : kColumns) csv += std::string(",") + c;
  csv += "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    Json report;
    try {
      report = Json::parse(ReadFile(reports[i]));
    } catch (const Json::parse_error& e) {
      Fail(ErrorCode::kParse, reports[i].string() + ": " + e.what());
    }
    const Json& a = report.at("aggregate");
    Json row = {{"label", labels[i]}, {"config_hash", report.at("config_hash")}};
    csv += labels[i];
    for (const char* c : kColumns) {
      const double v = a.contains(c) ? a.at(c).get<double>() : 0.0;
      row[c] = v;
      csv += "," + Fixed(v);
    }
    csv += "\n";
    rows.push_back(std::move(row));
  }
  WriteFileAtomic(out_json, Json{{"rows", rows}}.dump(2) + "\n");
  WriteFileAtomic(out_csv, csv);
}

}  // namespace stages

}  // namespace genret
