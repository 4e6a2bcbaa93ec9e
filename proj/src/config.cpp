// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include "error.hpp"

namespace genret {

namespace {

bool SameKind(const Json& want, const Json& got) {
  if (want.is_boolean()) return got.is_boolean();
  if (want.is_number_integer()) return got.is_number_integer();
  if (want.is_number()) return got.is_number();
  if (want.is_string()) return got.is_string();
  if (want.is_array()) return got.is_array();
  if (want.is_object()) return got.is_object();
  return false;
}

const char* KindName(const Json& j) {
  if (j.is_boolean()) return "a boolean";
  if (j.is_number_integer()) return "an integer";
  if (j.is_number()) return "a number";
  if (j.is_string()) return "a string";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  return "null";
}

Json MergeAt(const Json& base, const Json& user, const std::string& prefix) {
  if (!user.is_object())
    Fail(ErrorCode::kInvalidArgument,
         "config section '" + (prefix.empty() ? std::string("<root>") : prefix) +
             "' must be an object");
  Json out = base;
  for (const auto& [key, value] : user.items()) {
    const std::string dotted = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key))
      Fail(ErrorCode::kInvalidArgument, "unknown config key '" + dotted + "'");
    const Json& want = base.at(key);
    if (want.is_object()) {
      out[key] = MergeAt(want, value, dotted);
    } else if (!SameKind(want, value)) {
      Fail(ErrorCode::kInvalidArgument, "config key '" + dotted + "' must be " +
                                            KindName(want) + ", got " +
                                            KindName(value));
    } else {
      out[key] = value;
    }
  }
  return out;
}

template <typename T>
T Get(const Json& j, const char* section, const char* key) {
  return j.at(section).at(key).get<T>();
}

}  // namespace

Json DefaultConfigJson() {
  const RunConfig defaults;
  return defaults.ToJson();
}

Json RunConfig::ToJson() const {
  return Json{
      {"paths",
       {{"documents", paths.documents},
        {"queries", paths.queries},
        {"eval_queries", paths.eval_queries},
        {"connectors", paths.connectors},
        {"pseudo", paths.pseudo},
        {"vocab", paths.vocab},
        {"trie", paths.trie},
        {"model", paths.model},
        {"output_dir", paths.output_dir}}},
      {"model",
       {{"embed_dim", model.embed_dim},
        {"hidden_dim", model.hidden_dim},
        {"encoder_layers", model.encoder_layers},
        {"decoder_layers", model.decoder_layers},
        {"heads", model.heads},
        {"max_input_len", model.max_input_len},
        {"max_output_len", model.max_output_len},
        {"share_encoder", model.share_encoder}}},
      {"vocab", {{"min_freq", vocab_min_freq}, {"max_size", vocab_max_size}}},
      {"train",
       {{"lambda", train.lambda},
        {"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"pretrain_epochs", pretrain_epochs},
        {"finetune_epochs", finetune_epochs},
        {"grad_clip", train.grad_clip},
        {"warmup_steps", train.warmup_steps},
        {"dropout", train.dropout},
        {"mix_stages", mix_stages},
        {"eval_every", eval_every}}},
      {"metrics",
       {{"k", metrics.k_values},
        {"rouge_beta", metrics.rouge_beta},
        {"qa_metric", metrics.qa_metric}}},
      {"llm",
       {{"backend", backend},
        {"base_url", http.base_url},
        {"model", http.model},
        {"api_key_env", http.api_key_env},
        {"temperature", http.temperature},
        {"timeout_s", http.timeout_s},
        {"max_attempts", http.max_attempts},
        {"max_tokens", http.max_tokens},
        {"max_in_flight", http.max_in_flight},
        {"min_interval_ms", static_cast<int>(http.min_interval_s * 1000.0)},
        {"backoff_base_s", http.backoff_base_s},
        {"cache_dir", http.cache_dir.string()}}},
      {"connector",
       {{"m", connector_m},
        {"n", connector_n},
        {"max_prompt_words", connector_max_prompt_words}}},
      {"iter",
       {{"k_docs", iter.k_docs},
        {"max_doc_words", iter.max_doc_words},
        {"iterations", iterations}}},
      {"pseudo", {{"k", pseudo_k}}},
      {"decode",
       {{"beam_size", beam.beam_size},
        {"max_answer_len", max_answer_len},
        {"length_normalize", beam.length_normalize}}},
      {"ablation",
       {{"use_q_connector", use_q_connector},
        {"use_d_connector", use_d_connector},
        {"docid_words", docid_words}}},
      {"seed", seed},
      {"jobs", jobs},
  };
}

std::string RunConfig::Hash() const {
  Json j = ToJson();
  j["paths"].erase("output_dir");
  j.erase("jobs");
  return Sha256Hex(j.dump()).substr(0, 16);
}

std::filesystem::path RunConfig::OutputDir() const {
  if (!paths.output_dir.empty()) return paths.output_dir;
  return std::filesystem::path("runs") / Hash();
}

Json MergeConfig(const Json& base, const Json& user) {
  return MergeAt(base, user, "");
}

void SetConfigValue(Json& config, const std::string& dotted_key,
                    const std::string& value) {
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  // A string-typed key keeps the raw text, so "--paths.model 12" stays a path.
  Json* node = &config;
  std::size_t start = 0;
  std::string path;
  for (;;) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string key = dotted_key.substr(start, dot - start);
    path += (path.empty() ? "" : ".") + key;
    if (!node->is_object() || !node->contains(key))
      Fail(ErrorCode::kInvalidArgument, "unknown config key '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object())
    Fail(ErrorCode::kInvalidArgument, "config key '" + dotted_key + "' is a section");
  if (node->is_string()) parsed = value;
  if (!SameKind(*node, parsed))
    Fail(ErrorCode::kInvalidArgument, "config key '" + dotted_key + "' must be " +
                                          KindName(*node) + ", got '" + value + "'");
  *node = parsed;
}

RunConfig ConfigFromJson(const Json& effective) {
  const Json j = MergeConfig(DefaultConfigJson(), effective);
  RunConfig c;
  c.paths.documents = Get<std::string>(j, "paths", "documents");
  c.paths.queries = Get<std::string>(j, "paths", "queries");
  c.paths.eval_queries = Get<std::string>(j, "paths", "eval_queries");
  c.paths.connectors = Get<std::string>(j, "paths", "connectors");
  c.paths.pseudo = Get<std::string>(j, "paths", "pseudo");
  c.paths.vocab = Get<std::string>(j, "paths", "vocab");
  c.paths.trie = Get<std::string>(j, "paths", "trie");
  c.paths.model = Get<std::string>(j, "paths", "model");
  c.paths.output_dir = Get<std::string>(j, "paths", "output_dir");

  c.model.embed_dim = Get<int>(j, "model", "embed_dim");
  c.model.hidden_dim = Get<int>(j, "model", "hidden_dim");
  c.model.encoder_layers = Get<int>(j, "model", "encoder_layers");
  c.model.decoder_layers = Get<int>(j, "model", "decoder_layers");
  c.model.heads = Get<int>(j, "model", "heads");
  c.model.max_input_len = Get<int>(j, "model", "max_input_len");
  c.model.max_output_len = Get<int>(j, "model", "max_output_len");
  c.model.share_encoder = Get<bool>(j, "model", "share_encoder");

  c.vocab_min_freq = Get<int>(j, "vocab", "min_freq");
  c.vocab_max_size = Get<int>(j, "vocab", "max_size");

  c.train.lambda = Get<double>(j, "train", "lambda");
  c.train.learning_rate = Get<double>(j, "train", "learning_rate");
  c.train.batch_size = Get<int>(j, "train", "batch_size");
  c.pretrain_epochs = Get<int>(j, "train", "pretrain_epochs");
  c.finetune_epochs = Get<int>(j, "train", "finetune_epochs");
  c.train.grad_clip = Get<double>(j, "train", "grad_clip");
  c.train.warmup_steps = Get<int>(j, "train", "warmup_steps");
  c.train.dropout = Get<double>(j, "train", "dropout");
  c.mix_stages = Get<bool>(j, "train", "mix_stages");
  c.eval_every = Get<int>(j, "train", "eval_every");

  c.metrics.k_values = Get<std::vector<int>>(j, "metrics", "k");
  c.metrics.rouge_beta = Get<double>(j, "metrics", "rouge_beta");
  c.metrics.qa_metric = Get<std::string>(j, "metrics", "qa_metric");

  c.backend = Get<std::string>(j, "llm", "backend");
  c.http.base_url = Get<std::string>(j, "llm", "base_url");
  c.http.model = Get<std::string>(j, "llm", "model");
  c.http.api_key_env = Get<std::string>(j, "llm", "api_key_env");
  c.http.temperature = Get<double>(j, "llm", "temperature");
  c.http.timeout_s = Get<double>(j, "llm", "timeout_s");
  c.http.max_attempts = Get<int>(j, "llm", "max_attempts");
  c.http.max_tokens = Get<int>(j, "llm", "max_tokens");
  c.http.max_in_flight = Get<int>(j, "llm", "max_in_flight");
  c.http.min_interval_s = Get<int>(j, "llm", "min_interval_ms") / 1000.0;
  c.http.backoff_base_s = Get<double>(j, "llm", "backoff_base_s");
  c.http.cache_dir = Get<std::string>(j, "llm", "cache_dir");

  c.connector_m = Get<int>(j, "connector", "m");
  c.connector_n = Get<int>(j, "connector", "n");
  c.connector_max_prompt_words = Get<int>(j, "connector", "max_prompt_words");

  c.iter.k_docs = Get<int>(j, "iter", "k_docs");
  c.iter.max_doc_words = Get<int>(j, "iter", "max_doc_words");
  c.iter.n = c.connector_n;
  c.iterations = Get<int>(j, "iter", "iterations");

  c.pseudo_k = Get<int>(j, "pseudo", "k");

  c.beam.beam_size = Get<int>(j, "decode", "beam_size");
  c.beam.length_normalize = Get<bool>(j, "decode", "length_normalize");
  c.max_answer_len = Get<int>(j, "decode", "max_answer_len");

  c.use_q_connector = Get<bool>(j, "ablation", "use_q_connector");
  c.use_d_connector = Get<bool>(j, "ablation", "use_d_connector");
  c.docid_words = Get<int>(j, "ablation", "docid_words");

  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();

  c.model.seed = c.seed;
  c.model.max_output_len = std::max(c.model.max_output_len, 2);
  c.beam.max_len = c.model.max_output_len;
  c.train.jobs = c.jobs;
  c.http.jitter_seed = c.seed;

  Require(c.backend == "stub" || c.backend == "stub-oracle" || c.backend == "http",
          "llm.backend must be stub, stub-oracle or http");
  Require(c.pretrain_epochs >= 0 && c.finetune_epochs >= 0,
          "train epochs must be >= 0");
  Require(c.eval_every >= 0, "train.eval_every must be >= 0");
  Require(c.vocab_min_freq >= 1, "vocab.min_freq must be >= 1");
  Require(c.vocab_max_size >= 0, "vocab.max_size must be >= 0");
  Require(c.connector_m >= 1 && c.connector_n >= 1, "connector.m and connector.n must be >= 1");
  Require(c.iter.k_docs >= 1, "iter.k_docs must be >= 1");
  Require(c.iterations >= 0, "iter.iterations must be >= 0");
  Require(c.pseudo_k >= 1, "pseudo.k must be >= 1");
  Require(c.beam.beam_size >= 1, "decode.beam_size must be >= 1");
  Require(c.max_answer_len >= 1, "decode.max_answer_len must be >= 1");
  Require(c.docid_words >= 1, "ablation.docid_words must be >= 1");
  Require(c.jobs >= 1, "jobs must be >= 1");
  c.metrics.Validate();
  c.train.Validate();
  return c;
}

Json LoadConfigFile(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(ReadFile(path));
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kParse, path.string() + ": expected an object");
  if (j.contains("paths") && j["paths"].is_object()) {
    const auto base = path.parent_path();
    for (auto& [key, value] : j["paths"].items()) {
      if (!value.is_string() || value.get<std::string>().empty()) continue;
      const std::filesystem::path p = value.get<std::string>();
      if (p.is_relative()) value = (base / p).lexically_normal().string();
    }
  }
  return j;
}

}  // namespace genret
