// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "test_util.hpp"
#include "trie.hpp"

namespace genret {
namespace {

using testing::CodeOf;

constexpr TokenId kA = 10, kB = 11, kC = 12, kZ = 13;

DocidTrie TwoDocTrie() {
  const std::vector<DocidSequence> seqs{{"d1", {kA, kB, kEos}}, {"d2", {kA, kC, kEos}}};
  return DocidTrie::Build(seqs);
}

std::vector<TokenId> V(std::initializer_list<TokenId> t) { return t; }

TEST_CASE("disambiguation") {
  using M = std::map<std::string, std::string>;
  CHECK(Disambiguate(M{{"d1", "alpha"}}) == M{{"d1", "alpha"}});
  CHECK(Disambiguate(M{{"d1", "alpha"}, {"d2", "alpha"}}) ==
        M{{"d1", "alpha"}, {"d2", "alpha #2"}});
  const M out = Disambiguate(M{{"d1", "alpha"}, {"d2", "Alpha."}});
  CHECK(out.at("d1") == "alpha");
  CHECK(NormalizeText(out.at("d2")) == "alpha #2");

  // A suffixed form never takes another document's original text.
  const M tricky = Disambiguate(M{{"a", "x"}, {"b", "x"}, {"c", "x #2"}});
  std::set<std::string> norms;
  for (const auto& [id, text] : tricky) norms.insert(NormalizeText(text));
  CHECK(norms.size() == 3);
  CHECK(tricky.at("c") == "x #2");
}

TEST_CASE("disambiguation is idempotent and yields distinct sequences") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words{"alpha", "Alpha.", "beta", "beta #2", "gamma", "x"};
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, std::string> in;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) in["d" + std::to_string(i)] = words[rng() % words.size()];
    const auto once = Disambiguate(in);
    CHECK(Disambiguate(once) == once);
    std::set<std::string> norms;
    for (const auto& [id, text] : once) norms.insert(NormalizeText(text));
    CHECK(norms.size() == once.size());
  }
}

TEST_CASE("empty trie") {
  const DocidTrie t = DocidTrie::Build({});
  CHECK(t.node_count() == 1);
  CHECK(t.AllowedNext({}).empty());
  CHECK(t.empty());
}

TEST_CASE("two-document trie shape and walks") {
  const DocidTrie t = TwoDocTrie();
  CHECK(t.AllowedNext({}) == V({kA}));
  CHECK(t.AllowedNext(V({kA})) == V({kB, kC}));
  CHECK(t.AllowedNext(V({kZ})).empty());
  CHECK(t.AllowedNext(V({kA, kB, kEos})).empty());
  CHECK(t.Resolve(V({kA, kB, kEos})) == "d1");
  CHECK(t.Resolve(V({kA, kC, kEos})) == "d2");
  CHECK(CodeOf([&] { t.Resolve(V({kA})); }) == ErrorCode::kNotFound);
  CHECK(CodeOf([&] { t.Resolve(V({kA, kB})); }) == ErrorCode::kNotFound);
}

TEST_CASE("build rejects malformed sequences") {
  const std::vector<DocidSequence> dup{{"d1", {kA, kEos}}, {"d2", {kA, kEos}}};
  CHECK(CodeOf([&] { DocidTrie::Build(dup); }) == ErrorCode::kDuplicate);
  const std::vector<DocidSequence> no_eos{{"d1", {kA}}};
  CHECK(CodeOf([&] { DocidTrie::Build(no_eos); }).has_value());
  const std::vector<DocidSequence> inner_eos{{"d1", {kA, kEos, kB, kEos}}};
  CHECK(CodeOf([&] { DocidTrie::Build(inner_eos); }).has_value());
  const std::vector<DocidSequence> empty{{"d1", {}}};
  CHECK(CodeOf([&] { DocidTrie::Build(empty); }).has_value());
}

TEST_CASE("completeness, soundness, prefix closure and node bound") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 1000);
    const auto seqs = testing::RandomDocids(rng, n, 4 + 12, 6);
    const DocidTrie t = DocidTrie::Build(seqs);
    std::size_t total = 0;
    std::set<std::vector<TokenId>> inserted;
    for (const auto& s : seqs) {
      CHECK(t.Resolve(s.tokens) == s.doc_id);
      total += s.tokens.size();
      inserted.insert(s.tokens);
    }
    CHECK(t.node_count() <= 1 + total);
    CHECK(t.sequence_count() == seqs.size());

    // Every path reachable by following allowed_next is a stored prefix, and
    // every complete one was inserted.
    std::vector<std::vector<TokenId>> stack{{}};
    std::size_t complete = 0;
    while (!stack.empty()) {
      const auto prefix = stack.back();
      stack.pop_back();
      const auto next = t.AllowedNext(prefix);
      if (!prefix.empty() && prefix.back() == kEos) {
        CHECK(next.empty());
        CHECK(inserted.contains(prefix));
        ++complete;
        continue;
      }
      CHECK(t.Walk(prefix) != DocidTrie::kNoNode);
      for (TokenId tok : next) {
        auto longer = prefix;
        longer.push_back(tok);
        CHECK(t.Walk(longer) != DocidTrie::kNoNode);
        stack.push_back(std::move(longer));
      }
    }
    CHECK(complete == seqs.size());
  }
}

TEST_CASE("node count equals the bound without shared prefixes") {
  const std::vector<DocidSequence> seqs{{"d1", {kA, kB, kEos}}, {"d2", {kC, kEos}}};
  CHECK(DocidTrie::Build(seqs).node_count() == 1 + 3 + 2);
  const DocidTrie shared = TwoDocTrie();
  CHECK(shared.node_count() < 1 + 3 + 3);
}

TEST_CASE("trie save/load") {
  const auto dir = testing::TempDir("trie");
  std::mt19937_64 rng(9);
  const auto seqs = testing::RandomDocids(rng, 40, 20, 5);
  const DocidTrie t = DocidTrie::Build(seqs);
  t.Save(dir / "trie.jsonl");
  const DocidTrie back = DocidTrie::Load(dir / "trie.jsonl");
  CHECK(back.Sequences() == t.Sequences());
  CHECK(back.node_count() == t.node_count());
}

TEST_CASE("tokenized identifiers end with EOS") {
  const std::vector<std::string> texts{"alpha beta"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 0);
  const auto seqs = TokenizeDocids({{"d1", "alpha beta"}}, v);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].tokens == std::vector<TokenId>{v.Id("alpha"), v.Id("beta"), kEos});
}

}  // namespace
}  // namespace genret
