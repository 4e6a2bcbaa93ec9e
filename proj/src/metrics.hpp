// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Retrieval and answer-quality measures. Every function is pure.

#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

namespace genret::metrics {

struct MetricConfig {
  std::vector<int> k_values = {1, 5, 10};
  double rouge_beta = 1.0;
  // One of "em", "f1", "bleu1", "rouge_l"; used for curve files.
  std::string qa_metric = "em";

  void Validate() const;
  int MaxK() const { return k_values.back(); }
};

// 1/rank of the first relevant document within the top k, else 0.
double ReciprocalRankAtK(std::span<const std::string> ranking,
                         const std::set<std::string>& relevant, int k);

// |relevant ∩ top-k| / |relevant|. Fails on an empty relevant set.
double RecallAtK(std::span<const std::string> ranking,
                 const std::set<std::string>& relevant, int k);

// Clipped unigram precision times min(1, exp(1 - r/c)), r being the
// reference length closest to the candidate length c (shorter on ties).
double Bleu1(const std::string& candidate,
             std::span<const std::string> references);

// LCS F-measure (1 + b^2) P R / (R + b^2 P).
double RougeL(const std::string& candidate, const std::string& reference,
              double beta = 1.0);

// Lowercase, strip punctuation, drop the articles a/an/the, collapse spaces.
std::string NormalizeAnswer(const std::string& text);

int ExactMatch(const std::string& prediction,
               std::span<const std::string> golds);

// Max over golds of token-multiset F1 after normalization. Both sides empty
// scores 1, exactly one side empty scores 0.
double TokenF1(const std::string& prediction,
               std::span<const std::string> golds);

}  // namespace genret::metrics
