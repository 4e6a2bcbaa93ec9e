// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: a JSON document of nested sections whose leaves are
// addressable by dotted keys ("train.lambda"). Unknown keys and type
// mismatches are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "connectors.hpp"
#include "decoding.hpp"
#include "jsonl.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "train.hpp"

namespace genret {

struct PathsConfig {
  std::string documents;
  std::string queries;       // labeled training queries
  std::string eval_queries;  // held-out queries
  std::string connectors;    // precomputed D-Connectors
  std::string pseudo;
  std::string vocab;
  std::string trie;
  std::string model;
  std::string output_dir;
};

struct RunConfig {
  PathsConfig paths;
  ModelConfig model;
  TrainConfig train;
  int pretrain_epochs = 30;
  int finetune_epochs = 150;
  bool mix_stages = false;
  int eval_every = 0;  // finetune epochs between held-out evaluations
  int vocab_min_freq = 1;
  int vocab_max_size = 0;
  metrics::MetricConfig metrics;
  std::string backend = "stub";  // stub | stub-oracle | http
  HttpConfig http;
  int connector_m = 32;
  int connector_n = 64;
  int connector_max_prompt_words = 0;
  IterPromptOptions iter;
  int iterations = 2;
  int pseudo_k = 10;
  BeamOptions beam;
  int max_answer_len = 16;
  bool use_q_connector = true;
  bool use_d_connector = true;
  int docid_words = 8;
  std::uint64_t seed = 42;
  int jobs = 1;

  // Effective configuration with every key present.
  Json ToJson() const;
  // Hex digest of the effective configuration, excluding output_dir and jobs.
  std::string Hash() const;
  std::filesystem::path OutputDir() const;
};

// Full default document.
Json DefaultConfigJson();

// Overlays `user` on the defaults; fails on unknown keys or mismatched types.
Json MergeConfig(const Json& base, const Json& user);

// Sets a dotted key. `value` is parsed as JSON when possible, else taken as a
// string.
void SetConfigValue(Json& config, const std::string& dotted_key,
                    const std::string& value);

RunConfig ConfigFromJson(const Json& effective);

// Reads a config file; relative paths.* entries are resolved against the
// file's directory.
Json LoadConfigFile(const std::filesystem::path& path);

}  // namespace genret
