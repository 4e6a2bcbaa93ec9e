// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "decoding.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "error.hpp"

namespace genret {

namespace {

double RankKey(double score, std::size_t length, bool normalize) {
  return normalize && length > 0 ? score / static_cast<double>(length) : score;
}

struct LiveBeam {
  BeamHypothesis hyp;
  IncrementalDecoder decoder;
  Eigen::VectorXd next;  // log-probs of the following token
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
  double key;
  DocidTrie::NodeId node;
};

}  // namespace

Eigen::VectorXd DecodeStep(const Model& model, Head head,
                           const EncoderState& state,
                           std::span<const TokenId> prefix) {
  Require(!prefix.empty() && prefix.front() == kBos,
          "decode prefix must start with BOS");
  IncrementalDecoder decoder = model.StartDecoder(head, state);
  Eigen::VectorXd logp;
  for (TokenId t : prefix) logp = decoder.Step(t);
  return logp;
}

std::vector<RetrievedDoc> ConstrainedBeamSearch(const Model& model,
                                                const EncoderState& state,
                                                const DocidTrie& trie,
                                                const BeamOptions& options) {
  Require(options.beam_size >= 1, "beam_size must be >= 1");
  Require(options.max_len >= 1, "max_len must be >= 1");
  if (trie.empty()) Fail(ErrorCode::kInvalidArgument, "empty docid trie");
  const std::size_t beam = static_cast<std::size_t>(options.beam_size);
  const int max_len = std::min(options.max_len, model.config().max_output_len);

  // Live prefixes always share one length.
  auto lex_less = [](const std::vector<TokenId>& a, TokenId ta,
                     const std::vector<TokenId>& b, TokenId tb) {
    if (a != b) return a < b;
    return ta < tb;
  };

  std::vector<LiveBeam> live;
  {
    LiveBeam root{{{kBos}, 0.0, DocidTrie::kRoot, false},
                  model.StartDecoder(Head::kRetrieval, state),
                  {}};
    root.next = root.decoder.Step(kBos);
    live.push_back(std::move(root));
  }
  std::vector<BeamHypothesis> completed;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const LiveBeam& b = live[i];
      for (TokenId t : trie.Children(b.hyp.node)) {
        const double score = b.hyp.log_score + b.next(t);
        cands.push_back({i, t, score,
                         RankKey(score, b.hyp.tokens.size(), options.length_normalize),
                         trie.Child(b.hyp.node, t)});
      }
    }
    if (cands.empty()) break;
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.key != b.key) return a.key > b.key;
      return lex_less(live[a.parent].hyp.tokens, a.token,
                      live[b.parent].hyp.tokens, b.token);
    });

    std::vector<LiveBeam> next_live;
    for (const Candidate& c : cands) {
      const LiveBeam& parent = live[c.parent];
      if (trie.IsTerminal(c.node)) {
        BeamHypothesis done = parent.hyp;
        done.tokens.push_back(c.token);
        done.log_score = c.score;
        done.node = c.node;
        done.complete = true;
        completed.push_back(std::move(done));
        continue;
      }
      if (next_live.size() >= beam) continue;
      LiveBeam child{parent.hyp, parent.decoder, {}};
      child.hyp.tokens.push_back(c.token);
      child.hyp.log_score = c.score;
      child.hyp.node = c.node;
      child.next = child.decoder.Step(c.token);
      next_live.push_back(std::move(child));
    }
    live = std::move(next_live);
    // Raw scores only fall as prefixes grow, so once B completed identifiers
    // outscore every live prefix nothing can enter the top B.
    if (!options.length_normalize && completed.size() >= beam && !live.empty()) {
      std::vector<double> done;
      for (const BeamHypothesis& h : completed) done.push_back(h.log_score);
      std::nth_element(done.begin(), done.begin() + static_cast<std::ptrdiff_t>(beam - 1),
                       done.end(), std::greater<>());
      double best_live = -std::numeric_limits<double>::infinity();
      for (const LiveBeam& b : live) best_live = std::max(best_live, b.hyp.log_score);
      if (best_live < done[beam - 1]) break;
    }
  }

  std::sort(completed.begin(), completed.end(),
            [&](const BeamHypothesis& a, const BeamHypothesis& b) {
              const double ka = RankKey(a.log_score, a.tokens.size() - 1,
                                        options.length_normalize);
              const double kb = RankKey(b.log_score, b.tokens.size() - 1,
                                        options.length_normalize);
              if (ka != kb) return ka > kb;
              return a.tokens < b.tokens;
            });
  if (completed.size() > beam) completed.resize(beam);

  std::vector<RetrievedDoc> out;
  out.reserve(completed.size());
  for (BeamHypothesis& h : completed)
    out.push_back({trie.DocAt(h.node), h.log_score,
                   std::vector<TokenId>(h.tokens.begin() + 1, h.tokens.end())});
  return out;
}

double ScoreSequence(const Model& model, const EncoderState& state,
                     std::span<const TokenId> docid_tokens) {
  Require(!docid_tokens.empty() && docid_tokens.back() == kEos,
          "docid sequence must be EOS-terminated");
  for (TokenId t : docid_tokens)
    Require(t >= 0 && t < model.config().vocab_size,
            "token " + std::to_string(t) + " outside vocabulary");
  const Mat logp = model.TeacherForcedLogProbs(Head::kRetrieval, state, docid_tokens);
  double total = 0.0;
  for (std::size_t i = 0; i < docid_tokens.size(); ++i)
    total += logp(static_cast<Eigen::Index>(i), docid_tokens[i]);
  return total;
}

std::vector<TokenId> GreedyDecode(const Model& model, Head head,
                                  const EncoderState& state, int max_len) {
  Require(max_len >= 1, "max_len must be >= 1");
  const int limit = std::min(max_len, model.config().max_output_len);
  IncrementalDecoder decoder = model.StartDecoder(head, state);
  Eigen::VectorXd logp = decoder.Step(kBos);
  std::vector<TokenId> out;
  for (int i = 0; i < limit; ++i) {
    TokenId best = 0;
    for (Eigen::Index t = 1; t < logp.size(); ++t)
      if (logp(t) > logp(best)) best = static_cast<TokenId>(t);
    if (best == kEos) break;
    out.push_back(best);
    if (i + 1 < limit) logp = decoder.Step(best);
  }
  return out;
}

}  // namespace genret
