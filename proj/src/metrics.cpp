// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "error.hpp"
#include "text.hpp"

namespace genret::metrics {

namespace {

std::vector<std::string> SplitSpaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// EM and F1 drop articles; BLEU-1 and ROUGE-L keep every word.
std::vector<std::string> AnswerTokens(const std::string& s) {
  return SplitSpaces(NormalizeAnswer(s));
}

std::map<std::string, int> Counts(const std::vector<std::string>& words) {
  std::map<std::string, int> c;
  for (const std::string& w : words) ++c[w];
  return c;
}

}  // namespace

void MetricConfig::Validate() const {
  Require(!k_values.empty(), "metrics.k must not be empty");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    Require(k_values[i] >= 1, "metrics.k values must be >= 1");
    Require(i == 0 || k_values[i] > k_values[i - 1],
            "metrics.k values must be strictly ascending");
  }
  Require(rouge_beta > 0.0, "metrics.rouge_beta must be > 0");
  Require(qa_metric == "em" || qa_metric == "f1" || qa_metric == "bleu1" ||
              qa_metric == "rouge_l",
          "metrics.qa_metric must be em, f1, bleu1 or rouge_l");
}

double ReciprocalRankAtK(std::span<const std::string> ranking,
                         const std::set<std::string>& relevant, int k) {
  Require(k >= 1, "k must be >= 1");
  const std::size_t limit = std::min(ranking.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i)
    if (relevant.contains(ranking[i])) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

double RecallAtK(std::span<const std::string> ranking,
                 const std::set<std::string>& relevant, int k) {
  Require(k >= 1, "k must be >= 1");
  Require(!relevant.empty(), "recall needs a non-empty relevant set");
  const std::size_t limit = std::min(ranking.size(), static_cast<std::size_t>(k));
  std::set<std::string> hit;
  for (std::size_t i = 0; i < limit; ++i)
    if (relevant.contains(ranking[i])) hit.insert(ranking[i]);
  return static_cast<double>(hit.size()) / static_cast<double>(relevant.size());
}

double Bleu1(const std::string& candidate,
             std::span<const std::string> references) {
  Require(!references.empty(), "bleu1 needs at least one reference");
  const std::vector<std::string> cand = NormalizeWords(candidate);
  if (cand.empty()) return 0.0;
  std::map<std::string, int> max_ref;
  std::size_t closest = 0;
  bool have_closest = false;
  const auto c = static_cast<long>(cand.size());
  for (const std::string& r : references) {
    const std::vector<std::string> ref = NormalizeWords(r);
    for (const auto& [w, n] : Counts(ref)) max_ref[w] = std::max(max_ref[w], n);
    const auto len = static_cast<long>(ref.size());
    if (!have_closest ||
        std::abs(len - c) < std::abs(static_cast<long>(closest) - c) ||
        (std::abs(len - c) == std::abs(static_cast<long>(closest) - c) &&
         ref.size() < closest)) {
      closest = ref.size();
      have_closest = true;
    }
  }
  int clipped = 0;
  for (const auto& [w, n] : Counts(cand)) {
    auto it = max_ref.find(w);
    if (it != max_ref.end()) clipped += std::min(n, it->second);
  }
  const double precision = static_cast<double>(clipped) / static_cast<double>(c);
  const double bp =
      std::min(1.0, std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(c)));
  return precision * bp;
}

double RougeL(const std::string& candidate, const std::string& reference,
              double beta) {
  const std::vector<std::string> a = NormalizeWords(candidate);
  const std::vector<std::string> b = NormalizeWords(reference);
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::vector<int>> dp(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                      : std::max(dp[i - 1][j], dp[i][j - 1]);
  const double lcs = dp[a.size()][b.size()];
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(a.size());
  const double r = lcs / static_cast<double>(b.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

std::string NormalizeAnswer(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    lowered += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
  }
  std::string out;
  for (const std::string& w : SplitSpaces(lowered)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int ExactMatch(const std::string& prediction,
               std::span<const std::string> golds) {
  const std::string p = NormalizeAnswer(prediction);
  for (const std::string& g : golds)
    if (NormalizeAnswer(g) == p) return 1;
  return 0;
}

double TokenF1(const std::string& prediction,
               std::span<const std::string> golds) {
  const std::vector<std::string> pred = AnswerTokens(prediction);
  double best = 0.0;
  for (const std::string& g : golds) {
    const std::vector<std::string> gold = AnswerTokens(g);
    double f1 = 0.0;
    if (pred.empty() && gold.empty()) {
      f1 = 1.0;
    } else if (!pred.empty() && !gold.empty()) {
      const auto pc = Counts(pred);
      const auto gc = Counts(gold);
      int common = 0;
      for (const auto& [w, n] : pc) {
        auto it = gc.find(w);
        if (it != gc.end()) common += std::min(n, it->second);
      }
      if (common > 0) {
        const double p = static_cast<double>(common) / static_cast<double>(pred.size());
        const double r = static_cast<double>(common) / static_cast<double>(gold.size());
        f1 = 2.0 * p * r / (p + r);
      }
    }
    best = std::max(best, f1);
  }
  return best;
}

}  // namespace genret::metrics
