// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end procedure: pseudo-data synthesis, the two training stages,
// single-pass and iterative inference, evaluation, and file-backed stage
// runners that share one output directory per configuration.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "connectors.hpp"
#include "corpus.hpp"
#include "decoding.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "text.hpp"
#include "train.hpp"
#include "trie.hpp"

namespace genret {

// Separator word between a pseudo query and its document.
inline constexpr const char* kContextSeparator = "context:";

struct PseudoPair {
  std::string doc_id;
  std::string pseudo_query;
  std::string pseudo_answer;
  std::string input_text;  // pseudo_query + separator + truncated document
  bool operator==(const PseudoPair&) const = default;
};

// Exactly k pairs per document. The document is truncated so the framed
// input fits max_input_len tokens.
std::vector<PseudoPair> GenPseudoData(const Corpus& corpus, int k,
                                      GenBackend& backend, std::uint64_t seed,
                                      int max_input_len, int jobs = 1);
void SavePseudo(const std::filesystem::path& path,
                std::span<const PseudoPair> pairs);
std::vector<PseudoPair> LoadPseudo(const std::filesystem::path& path);

// Disambiguated identifier text per document: the D-Connector, or the title
// plus the first `docid_words` words when D-Connectors are disabled.
std::map<std::string, std::string> DocidTexts(const Corpus& corpus,
                                              bool use_d_connector,
                                              int docid_words);

Vocabulary BuildPipelineVocab(const Corpus& corpus,
                              const std::map<std::string, std::string>& docid_texts,
                              std::span<const QueryRecord> queries,
                              std::span<const PseudoPair> pseudo, int min_freq,
                              int max_size);

using DocidMap = std::map<std::string, std::vector<TokenId>>;
DocidMap DocidsFromTrie(const DocidTrie& trie);

enum class Stage { kPretrain, kFinetune };
const char* StageName(Stage stage);

struct TrainItem {
  TrainExample example;
  Stage stage = Stage::kPretrain;
  std::string source;  // doc id or query id
};

std::vector<TrainItem> PretrainItems(std::span<const PseudoPair> pairs,
                                     const DocidMap& docids,
                                     const Vocabulary& vocab);

struct SkippedQuery {
  std::string query_id;
  std::string reason;
};

// One item per (query, relevant document). Queries that cannot be used are
// reported in `skipped`.
std::vector<TrainItem> FinetuneItems(std::span<const QueryRecord> queries,
                                     const DocidMap& docids,
                                     const Vocabulary& vocab,
                                     bool use_q_connector,
                                     std::vector<SkippedQuery>* skipped);

struct StageOptions {
  TrainConfig train;
  int epochs = 1;
  std::uint64_t seed = 42;
  bool allow_mixed = false;  // accept items of the other stage
  // Called after every epoch with the 1-based epoch number.
  std::function<void(int)> on_epoch;
};

// Shuffled minibatch training; returns the per-step losses. Fails on an
// empty item list or on an item from the wrong stage.
std::vector<StepLosses> TrainStage(Model& model, std::span<const TrainItem> items,
                                   Stage stage, const StageOptions& options);

void WriteLossCsv(const std::filesystem::path& path,
                  std::span<const StepLosses> steps);

struct InferenceOptions {
  BeamOptions beam;
  int max_answer_len = 16;
  bool use_q_connector = true;
  bool answer = true;
  int connector_n = 64;
  IterPromptOptions iter;
};

struct IterState {
  int round = 0;
  std::string q_connector;  // the encoder input of this round
  std::vector<RetrievedDoc> ranking;
  std::string answer;
};

struct IterOutcome {
  std::vector<IterState> rounds;
  bool partial = false;  // a backend failure stopped the loop early
  std::string error;
};

// Read-only bundle for answering queries.
class Engine {
 public:
  Engine(const Model& model, const DocidTrie& trie, const Vocabulary& vocab,
         const Corpus& corpus, InferenceOptions options);

  IterState Round(int round, const std::string& input_text) const;
  // Generates the Q-Connector only when the record lacks one.
  IterState RunBase(const QueryRecord& query, GenBackend& backend) const;
  IterOutcome RunIter(const QueryRecord& query, GenBackend& backend,
                      int iterations) const;

  const InferenceOptions& options() const { return options_; }

 private:
  const Model& model_;
  const DocidTrie& trie_;
  const Vocabulary& vocab_;
  const Corpus& corpus_;
  InferenceOptions options_;
};

std::vector<IterOutcome> RunQueries(const Engine& engine,
                                    std::span<const QueryRecord> queries,
                                    GenBackend& backend, int iterations,
                                    int jobs);

// Run file for one round; queries whose loop stopped before `round` are left
// out.
Run RoundRun(std::span<const QueryRecord> queries,
             std::span<const IterOutcome> outcomes, int round, bool answers,
             bool length_normalize);

// Per-query and aggregate metrics. Fails on an empty run or an unknown query
// id.
Json EvaluateRun(const Run& run, std::span<const QueryRecord> gold,
                 const metrics::MetricConfig& config, const std::string& run_id,
                 const std::string& config_hash);

// Aggregate MRR@10 and the configured QA metric of a report.
std::pair<double, double> CurvePoint(const Json& report,
                                     const metrics::MetricConfig& config);

// Builds the backend named by config.backend. The gold-injecting stub maps
// every query in `queries` to the text of its first relevant document.
std::unique_ptr<GenBackend> MakeBackend(const RunConfig& config,
                                        const Corpus& corpus,
                                        std::span<const QueryRecord> queries);

// File-backed stages over config.OutputDir(). Each writes its artifacts and
// the effective configuration into that directory.
namespace stages {

struct ConnectorKinds {
  bool documents = true;
  bool queries = true;
};

void GenConnectors(const RunConfig& config, ConnectorKinds kinds);
void GenPseudo(const RunConfig& config);
void BuildTrie(const RunConfig& config);
void Pretrain(const RunConfig& config);
void Finetune(const RunConfig& config);
// Round-0 inference over the evaluation queries into run.jsonl.
void Retrieve(const RunConfig& config, bool answers);
// Rounds 0..iterations into run_round{r}.jsonl; run.jsonl holds the last.
void RunIter(const RunConfig& config);
// Writes `report_path` (default report.json) and returns the report.
Json Evaluate(const RunConfig& config, const std::filesystem::path& run_path,
              const std::filesystem::path& queries_path,
              const std::filesystem::path& report_path);
// curves_iteration.csv from the round runs, curves_epoch.csv from the
// finetune-time evaluations.
void Curves(const RunConfig& config);
// Every stage in order; returns the final report.
Json RunAll(const RunConfig& config);

// Four-or-more-row comparison of evaluation reports.
void Compare(std::span<const std::string> labels,
             std::span<const std::filesystem::path> reports,
             const std::filesystem::path& out_json,
             const std::filesystem::path& out_csv);

std::filesystem::path Artifact(const RunConfig& config, const std::string& name);

}  // namespace stages

}  // namespace genret
