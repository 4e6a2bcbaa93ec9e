// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "genret/genret.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <new>
#include <string>
#include <vector>

#include "config.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "log.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

struct genret_config {
  genret::Json json;
};
struct genret_vocab {
  genret::Vocabulary vocab;
};
struct genret_trie {
  genret::DocidTrie trie;
};
struct genret_model {
  genret::Model model;
};

namespace {

thread_local std::string g_last_error;

genret_status Record(genret_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
genret_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GENRET_OK;
  } catch (const genret::Error& e) {
    return Record(static_cast<genret_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Record(GENRET_ERR_INTERNAL, "out of memory");
  } catch (const genret::Json::exception& e) {
    return Record(GENRET_ERR_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Record(GENRET_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return Record(GENRET_ERR_INTERNAL, e.what());
  }
}

void Need(const void* p, const char* name) {
  if (p == nullptr)
    genret::Fail(genret::ErrorCode::kInvalidArgument, std::string(name) + " is null");
}

char* Copy(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> Strings(const char* const* items, std::size_t n,
                                 const char* name) {
  if (n > 0) Need(items, name);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    Need(items[i], name);
    out.emplace_back(items[i]);
  }
  return out;
}

genret::RunConfig Typed(const genret_config* c) {
  Need(c, "config");
  return genret::ConfigFromJson(c->json);
}

std::string OrEmpty(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* genret_version(void) { return "0.1.0"; }

const char* genret_last_error(void) { return g_last_error.c_str(); }

const char* genret_status_name(genret_status status) {
  switch (status) {
    case GENRET_OK: return "ok";
    case GENRET_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GENRET_ERR_IO: return "i/o error";
    case GENRET_ERR_PARSE: return "parse error";
    case GENRET_ERR_DUPLICATE: return "duplicate";
    case GENRET_ERR_NOT_FOUND: return "not found";
    case GENRET_ERR_STATE: return "invalid state";
    case GENRET_ERR_INTEGRITY: return "integrity error";
    case GENRET_ERR_VERSION: return "version mismatch";
    case GENRET_ERR_NUMERIC: return "numeric error";
    case GENRET_ERR_BACKEND_TRANSPORT: return "backend transport error";
    case GENRET_ERR_BACKEND_REQUEST: return "backend request error";
    case GENRET_ERR_BACKEND_PROTOCOL: return "backend protocol error";
    case GENRET_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void genret_string_free(char* s) { std::free(s); }

void genret_set_log_level(genret_log_level level) {
  genret::SetLogLevel(static_cast<genret::LogLevel>(level));
}

genret_status genret_config_new(genret_config** out) {
  return Guard([&] {
    Need(out, "out");
    *out = new genret_config{genret::DefaultConfigJson()};
  });
}

genret_status genret_config_load(const char* path, genret_config** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    genret::Json j = genret::MergeConfig(genret::DefaultConfigJson(),
                                         genret::LoadConfigFile(path));
    genret::ConfigFromJson(j);
    *out = new genret_config{std::move(j)};
  });
}

genret_status genret_config_set(genret_config* config, const char* dotted_key,
                                const char* value) {
  return Guard([&] {
    Need(config, "config");
    Need(dotted_key, "key");
    Need(value, "value");
    genret::Json next = config->json;
    genret::SetConfigValue(next, dotted_key, value);
    genret::ConfigFromJson(next);
    config->json = std::move(next);
  });
}

genret_status genret_config_to_json(const genret_config* config, char** out_json) {
  return Guard([&] {
    Need(out_json, "out");
    *out_json = Copy(Typed(config).ToJson().dump(2));
  });
}

genret_status genret_config_hash(const genret_config* config, char** out_hash) {
  return Guard([&] {
    Need(out_hash, "out");
    *out_hash = Copy(Typed(config).Hash());
  });
}

genret_status genret_config_output_dir(const genret_config* config, char** out_dir) {
  return Guard([&] {
    Need(out_dir, "out");
    *out_dir = Copy(Typed(config).OutputDir().string());
  });
}

void genret_config_free(genret_config* config) { delete config; }

genret_status genret_gen_connectors(const genret_config* config, int kinds) {
  return Guard([&] {
    if (kinds == 0 || (kinds & ~(GENRET_CONNECTORS_DOCUMENTS | GENRET_CONNECTORS_QUERIES)))
      genret::Fail(genret::ErrorCode::kInvalidArgument, "invalid connector kinds");
    genret::stages::GenConnectors(
        Typed(config), {(kinds & GENRET_CONNECTORS_DOCUMENTS) != 0,
                        (kinds & GENRET_CONNECTORS_QUERIES) != 0});
  });
}

genret_status genret_gen_pseudo(const genret_config* config) {
  return Guard([&] { genret::stages::GenPseudo(Typed(config)); });
}

genret_status genret_build_trie(const genret_config* config) {
  return Guard([&] { genret::stages::BuildTrie(Typed(config)); });
}

genret_status genret_pretrain(const genret_config* config) {
  return Guard([&] { genret::stages::Pretrain(Typed(config)); });
}

genret_status genret_finetune(const genret_config* config) {
  return Guard([&] { genret::stages::Finetune(Typed(config)); });
}

genret_status genret_retrieve(const genret_config* config, int with_answers) {
  return Guard([&] { genret::stages::Retrieve(Typed(config), with_answers != 0); });
}

genret_status genret_run_iter(const genret_config* config) {
  return Guard([&] { genret::stages::RunIter(Typed(config)); });
}

genret_status genret_evaluate(const genret_config* config, const char* run_path,
                              const char* queries_path, const char* report_path,
                              char** out_report_json) {
  return Guard([&] {
    const genret::Json report = genret::stages::Evaluate(
        Typed(config), OrEmpty(run_path), OrEmpty(queries_path), OrEmpty(report_path));
    if (out_report_json) *out_report_json = Copy(report.dump(2));
  });
}

genret_status genret_curves(const genret_config* config) {
  return Guard([&] { genret::stages::Curves(Typed(config)); });
}

genret_status genret_run_all(const genret_config* config, char** out_report_json) {
  return Guard([&] {
    const genret::Json report = genret::stages::RunAll(Typed(config));
    if (out_report_json) *out_report_json = Copy(report.dump(2));
  });
}

genret_status genret_compare(size_t count, const char* const* labels,
                             const char* const* report_paths, const char* out_json,
                             const char* out_csv) {
  return Guard([&] {
    Need(out_json, "out_json");
    Need(out_csv, "out_csv");
    const std::vector<std::string> l = Strings(labels, count, "labels");
    const std::vector<std::string> r = Strings(report_paths, count, "report_paths");
    const std::vector<std::filesystem::path> paths(r.begin(), r.end());
    genret::stages::Compare(l, paths, out_json, out_csv);
  });
}

genret_status genret_vocab_load(const char* path, genret_vocab** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    *out = new genret_vocab{genret::Vocabulary::Load(path)};
  });
}

size_t genret_vocab_size(const genret_vocab* vocab) {
  return vocab ? vocab->vocab.size() : 0;
}

void genret_vocab_free(genret_vocab* vocab) { delete vocab; }

genret_status genret_trie_load(const char* path, genret_trie** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    *out = new genret_trie{genret::DocidTrie::Load(path)};
  });
}

size_t genret_trie_size(const genret_trie* trie) {
  return trie ? trie->trie.sequence_count() : 0;
}

void genret_trie_free(genret_trie* trie) { delete trie; }

genret_status genret_model_load(const char* path, const genret_vocab* vocab,
                                genret_model** out) {
  return Guard([&] {
    Need(path, "path");
    Need(vocab, "vocab");
    Need(out, "out");
    std::uint64_t hash = 0;
    genret::Model model = genret::Model::Load(path, &hash);
    if (hash != vocab->vocab.Hash())
      genret::Fail(genret::ErrorCode::kState,
                   "checkpoint was trained with a different vocabulary");
    *out = new genret_model{std::move(model)};
  });
}

void genret_model_free(genret_model* model) { delete model; }

genret_status genret_model_retrieve(const genret_model* model, const genret_vocab* vocab,
                                    const genret_trie* trie, const char* input_text,
                                    int beam_size, char** out_json) {
  return Guard([&] {
    Need(model, "model");
    Need(vocab, "vocab");
    Need(trie, "trie");
    Need(input_text, "input_text");
    Need(out_json, "out");
    genret::BeamOptions options;
    options.beam_size = beam_size;
    options.max_len = model->model.config().max_output_len;
    const auto state =
        model->model.Encode(genret::Encode(vocab->vocab, input_text, true));
    genret::Json ranking = genret::Json::array();
    for (const auto& d : genret::ConstrainedBeamSearch(model->model, state, trie->trie, options))
      ranking.push_back({{"doc_id", d.doc_id}, {"score", d.log_score}});
    *out_json = Copy(ranking.dump());
  });
}

genret_status genret_model_answer(const genret_model* model, const genret_vocab* vocab,
                                  const char* input_text, int max_len, char** out_answer) {
  return Guard([&] {
    Need(model, "model");
    Need(vocab, "vocab");
    Need(input_text, "input_text");
    Need(out_answer, "out");
    const auto state =
        model->model.Encode(genret::Encode(vocab->vocab, input_text, true));
    *out_answer = Copy(genret::Decode(
        vocab->vocab, genret::GreedyDecode(model->model, genret::Head::kQa, state, max_len)));
  });
}

genret_status genret_render_prompt(genret_prompt_kind kind, const char* bindings_json,
                                   char** out_prompt) {
  return Guard([&] {
    Need(bindings_json, "bindings_json");
    Need(out_prompt, "out");
    genret::PromptKind k;
    switch (kind) {
      case GENRET_PROMPT_D_CONNECTOR: k = genret::PromptKind::kDConnector; break;
      case GENRET_PROMPT_Q_CONNECTOR: k = genret::PromptKind::kQConnector; break;
      case GENRET_PROMPT_ITER_Q_CONNECTOR: k = genret::PromptKind::kIterQConnector; break;
      default: genret::Fail(genret::ErrorCode::kInvalidArgument, "unknown prompt kind");
    }
    const genret::Json j = genret::Json::parse(bindings_json);
    std::map<std::string, std::string> bindings;
    for (const auto& [key, value] : j.items())
      bindings[key] = value.is_string() ? value.get<std::string>() : value.dump();
    *out_prompt = Copy(genret::PromptTemplate::For(k).Render(bindings));
  });
}

genret_status genret_metric_reciprocal_rank(const char* const* ranking, size_t ranking_len,
                                            const char* const* relevant,
                                            size_t relevant_len, int k, double* out) {
  return Guard([&] {
    Need(out, "out");
    const auto r = Strings(ranking, ranking_len, "ranking");
    const auto rel = Strings(relevant, relevant_len, "relevant");
    *out = genret::metrics::ReciprocalRankAtK(r, {rel.begin(), rel.end()}, k);
  });
}

genret_status genret_metric_recall(const char* const* ranking, size_t ranking_len,
                                   const char* const* relevant, size_t relevant_len,
                                   int k, double* out) {
  return Guard([&] {
    Need(out, "out");
    const auto r = Strings(ranking, ranking_len, "ranking");
    const auto rel = Strings(relevant, relevant_len, "relevant");
    *out = genret::metrics::RecallAtK(r, {rel.begin(), rel.end()}, k);
  });
}

genret_status genret_metric_bleu1(const char* candidate, const char* const* references,
                                  size_t count, double* out) {
  return Guard([&] {
    Need(candidate, "candidate");
    Need(out, "out");
    *out = genret::metrics::Bleu1(candidate, Strings(references, count, "references"));
  });
}

genret_status genret_metric_rouge_l(const char* candidate, const char* reference,
                                    double beta, double* out) {
  return Guard([&] {
    Need(candidate, "candidate");
    Need(reference, "reference");
    Need(out, "out");
    *out = genret::metrics::RougeL(candidate, reference, beta);
  });
}

genret_status genret_metric_exact_match(const char* prediction, const char* const* golds,
                                        size_t count, int* out) {
  return Guard([&] {
    Need(prediction, "prediction");
    Need(out, "out");
    *out = genret::metrics::ExactMatch(prediction, Strings(golds, count, "golds"));
  });
}

genret_status genret_metric_token_f1(const char* prediction, const char* const* golds,
                                     size_t count, double* out) {
  return Guard([&] {
    Need(prediction, "prediction");
    Need(out, "out");
    *out = genret::metrics::TokenF1(prediction, Strings(golds, count, "golds"));
  });
}

}  // extern "C"
