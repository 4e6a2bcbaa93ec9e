// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "decoding.hpp"
#include "test_util.hpp"
#include "train.hpp"

namespace genret {
namespace {

using testing::CodeOf;
using testing::TinyConfig;

std::vector<TokenId> V(std::initializer_list<TokenId> t) { return t; }

// Every tensor zero, so both heads emit softmax(out_bias) at every step.
Model ConstantModel(int vocab, const std::vector<double>& probs) {
  Model m = Model::Init(TinyConfig(vocab));
  for (Mat& p : m.mutable_params()) p.setZero();
  for (const char* name : {"retr.out_bias", "qa.out_bias"}) {
    Mat& bias = m.mutable_params()[static_cast<std::size_t>(testing::ParamNamed(m, name))];
    for (int t = 0; t < vocab; ++t) bias.data()[t] = std::log(probs[static_cast<std::size_t>(t)]);
  }
  return m;
}

TEST_CASE("a single identifier is the only legal output") {
  std::mt19937_64 rng(1);
  const auto seqs = testing::RandomDocids(rng, 1, 20, 4);
  const DocidTrie trie = DocidTrie::Build(seqs);
  const Model m = Model::Init(TinyConfig(20, 3));
  BeamOptions opt;
  opt.beam_size = 1;
  const auto out = ConstrainedBeamSearch(m, m.Encode(V({kBos, 5, kEos})), trie, opt);
  REQUIRE(out.size() == 1);
  CHECK(out[0].doc_id == seqs[0].doc_id);
  CHECK(out[0].tokens == seqs[0].tokens);
}

TEST_CASE("a full-width beam reproduces exhaustive enumeration") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    const auto seqs = testing::RandomDocids(rng, n, 16, 4);
    const DocidTrie trie = DocidTrie::Build(seqs);
    const Model m = Model::Init(TinyConfig(16, 100 + static_cast<std::uint64_t>(trial)));
    const auto state = m.Encode(testing::RandomInput(rng, 16, 6));
    BeamOptions opt;
    opt.beam_size = n;
    const auto beam = ConstrainedBeamSearch(m, state, trie, opt);
    const auto oracle = testing::ExhaustiveRanking(m, state, trie);
    REQUIRE(beam.size() == oracle.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      CHECK(beam[i].doc_id == oracle[i].doc_id);
      CHECK(std::abs(beam[i].log_score - oracle[i].score) < 1e-6);
    }
  }
}

TEST_CASE("narrow beams return valid identifiers with reproducible scores") {
  std::mt19937_64 rng(3);
  const auto seqs = testing::RandomDocids(rng, 10, 16, 4);
  const DocidTrie trie = DocidTrie::Build(seqs);
  const Model m = Model::Init(TinyConfig(16, 7));
  const auto state = m.Encode(V({kBos, 6, 7, kEos}));
  BeamOptions opt;
  opt.beam_size = 3;
  const auto out = ConstrainedBeamSearch(m, state, trie, opt);
  CHECK(out.size() <= 3);
  std::set<std::string> ids;
  for (const auto& d : out) {
    CHECK(trie.Resolve(d.tokens) == d.doc_id);
    CHECK(std::abs(ScoreSequence(m, state, d.tokens) - d.log_score) < 1e-6);
    ids.insert(d.doc_id);
  }
  CHECK(ids.size() == out.size());
  for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].log_score >= out[i].log_score);
}

// Beam search is not monotone in the width for every instance: a wider beam
// can push the greedy path out at an intermediate step. An exact-width beam
// does dominate every narrower one.
TEST_CASE("an exact-width beam dominates narrower beams") {
  std::mt19937_64 rng(4);
  int non_monotone = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto seqs = testing::RandomDocids(rng, 30, 12, 5);
    const DocidTrie trie = DocidTrie::Build(seqs);
    const Model m = Model::Init(TinyConfig(12, 200 + static_cast<std::uint64_t>(trial)));
    const auto state = m.Encode(testing::RandomInput(rng, 12, 5));
    BeamOptions exact;
    exact.beam_size = 30;
    const double best = ConstrainedBeamSearch(m, state, trie, exact).front().log_score;
    CHECK(std::abs(best - testing::ExhaustiveRanking(m, state, trie).front().score) < 1e-9);
    double prev = -INFINITY;
    for (int b : {1, 2, 4, 8}) {
      BeamOptions opt;
      opt.beam_size = b;
      const RetrievedDoc top = ConstrainedBeamSearch(m, state, trie, opt).front();
      CHECK(top.log_score <= best + 1e-12);
      CHECK(std::abs(ScoreSequence(m, state, top.tokens) - top.log_score) < 1e-9);
      if (top.log_score < prev) ++non_monotone;
      prev = top.log_score;
    }
  }
  MESSAGE("instances where a wider beam lowered the top score: " << non_monotone);
}

TEST_CASE("length-normalized ranking") {
  // p(a) = 0.5, p(EOS) = 0.3: [EOS] scores log 0.3 and [a, EOS] log 0.15,
  // but per token [a, EOS] is log(0.15)/2 > log 0.3.
  const int v = 8;
  std::vector<double> probs(v, 0.2 / 6);
  probs[kEos] = 0.3;
  probs[5] = 0.5;
  const Model m = ConstantModel(v, probs);
  const std::vector<DocidSequence> seqs{{"short", V({kEos})}, {"long", V({5, kEos})}};
  const DocidTrie trie = DocidTrie::Build(seqs);
  const auto state = m.Encode(V({kBos, kEos}));
  BeamOptions opt;
  opt.beam_size = 2;
  CHECK(ConstrainedBeamSearch(m, state, trie, opt).front().doc_id == "short");
  opt.length_normalize = true;
  CHECK(ConstrainedBeamSearch(m, state, trie, opt).front().doc_id == "long");
}

TEST_CASE("sequence score follows the product rule") {
  const int v = 8;
  std::vector<double> probs(v, 0.1 / 6);
  probs[5] = 0.5;
  probs[kEos] = 0.4;
  const Model m = ConstantModel(v, probs);
  const auto state = m.Encode(V({kBos, 6, kEos}));
  CHECK(std::abs(ScoreSequence(m, state, V({5, kEos})) - std::log(0.2)) < 1e-9);
  std::mt19937_64 rng(5);
  const Model r = Model::Init(TinyConfig(16, 9));
  const auto rs = r.Encode(V({kBos, 6, kEos}));
  for (const auto& s : testing::RandomDocids(rng, 20, 16, 5))
    CHECK(ScoreSequence(r, rs, s.tokens) <= 0.0);
}

TEST_CASE("greedy decoding") {
  const int v = 8;
  std::vector<double> probs(v, 0.05);
  probs[kEos] = 0.7;
  const Model eos = ConstantModel(v, probs);
  CHECK(GreedyDecode(eos, Head::kQa, eos.Encode(V({kBos, kEos})), 5).empty());

  const Model m = Model::Init(TinyConfig(16, 4));
  const auto s = m.Encode(V({kBos, 7, kEos}));
  const auto a = GreedyDecode(m, Head::kQa, s, 6);
  CHECK(a == GreedyDecode(m, Head::kQa, s, 6));
  CHECK(a.size() <= 6);
}

TEST_CASE("an overfit model decodes its answer and ranks its identifier first") {
  const std::vector<std::string> texts{"what is the capital of france paris alpha beta gamma"};
  const Vocabulary vocab = Vocabulary::Build(texts, 1, 0);
  ModelConfig c = TinyConfig(static_cast<int>(vocab.size()), 2);
  Model m = Model::Init(c);
  std::vector<DocidSequence> seqs{{"d1", Encode(vocab, "alpha beta", false)},
                                  {"d2", Encode(vocab, "alpha gamma", false)},
                                  {"d3", Encode(vocab, "gamma", false)}};
  for (auto& s : seqs) s.tokens.push_back(kEos);
  const DocidTrie trie = DocidTrie::Build(seqs);

  TrainExample ex{Encode(vocab, "what is the capital of france", true), seqs[1].tokens,
                  Encode(vocab, "paris", false)};
  ex.answer_target.push_back(kEos);
  const std::vector<TrainExample> batch{ex};
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.warmup_steps = 5;
  tc.dropout = 0.0;
  Trainer trainer(m, tc);
  for (int i = 0; i < 150; ++i) trainer.Step(batch);

  const auto state = m.Encode(ex.input);
  CHECK(Decode(vocab, GreedyDecode(m, Head::kQa, state, 5)) == "paris");
  BeamOptions opt;
  opt.beam_size = 3;
  CHECK(ConstrainedBeamSearch(m, state, trie, opt).front().doc_id == "d2");
}

TEST_CASE("search argument validation") {
  const Model m = Model::Init(TinyConfig(16));
  const auto s = m.Encode(V({kBos, kEos}));
  const DocidTrie empty = DocidTrie::Build({});
  BeamOptions opt;
  CHECK(CodeOf([&] { ConstrainedBeamSearch(m, s, empty, opt); }) == ErrorCode::kInvalidArgument);
  std::mt19937_64 rng(1);
  const DocidTrie trie = DocidTrie::Build(testing::RandomDocids(rng, 3, 16, 3));
  opt.beam_size = 0;
  CHECK(CodeOf([&] { ConstrainedBeamSearch(m, s, trie, opt); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { GreedyDecode(m, Head::kQa, s, 0); }) == ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace genret
