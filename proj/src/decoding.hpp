// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Inference: trie-constrained beam search over document identifiers and
// greedy answer decoding.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "trie.hpp"

namespace genret {

// Log-probabilities of the token following `prefix` (which starts with BOS).
// Recomputes the prefix from scratch.
Eigen::VectorXd DecodeStep(const Model& model, Head head,
                           const EncoderState& state,
                           std::span<const TokenId> prefix);

struct BeamHypothesis {
  std::vector<TokenId> tokens;  // BOS-rooted
  double log_score = 0.0;
  DocidTrie::NodeId node = DocidTrie::kRoot;
  bool complete = false;
};

struct RetrievedDoc {
  std::string doc_id;
  double log_score = 0.0;
  std::vector<TokenId> tokens;  // EOS-terminated identifier, without BOS
};

struct BeamOptions {
  int beam_size = 10;
  int max_len = 48;
  // Rank by log_score / length instead of the raw sum.
  bool length_normalize = false;
};

// Ranked by score (raw sum unless length_normalize), ties broken by
// lexicographic token order. At most beam_size distinct documents.
std::vector<RetrievedDoc> ConstrainedBeamSearch(const Model& model,
                                                const EncoderState& state,
                                                const DocidTrie& trie,
                                                const BeamOptions& options);

// Sum of retrieval-head log-probabilities of an EOS-terminated identifier,
// computed by a single teacher-forced pass.
double ScoreSequence(const Model& model, const EncoderState& state,
                     std::span<const TokenId> docid_tokens);

// Argmax decoding (ties to the lowest id) until EOS or max_len tokens.
// The returned sequence excludes EOS.
std::vector<TokenId> GreedyDecode(const Model& model, Head head,
                                  const EncoderState& state, int max_len);

}  // namespace genret
