// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <thread>

#include "corpus.hpp"
#include "test_util.hpp"
#include "text.hpp"

namespace genret {
namespace {

using testing::CodeOf;
using testing::TempDir;

TEST_CASE("normalization lowercases and splits punctuation") {
  CHECK(NormalizeWords("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(NormalizeText("  A\tb.c  ") == "a b c");
  CHECK(NormalizeText("alpha #2") == "alpha #2");
  CHECK(NormalizeText("") == "");
}

TEST_CASE("empty text list yields only reserved tokens") {
  const Vocabulary v = Vocabulary::Build({}, 1, 0);
  CHECK(v.size() == 4);
  CHECK(v.Token(kPad) == "<pad>");
  CHECK(v.Id("</s>") == kEos);
}

TEST_CASE("vocabulary orders by frequency") {
  const std::vector<std::string> texts{"a a b"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 0);
  REQUIRE(v.size() == 6);
  CHECK(v.Contains("a"));
  CHECK(v.Contains("b"));
  CHECK(v.Id("a") < v.Id("b"));
}

TEST_CASE("min_freq drops rare tokens") {
  const std::vector<std::string> texts{"a b"};
  CHECK(Vocabulary::Build(texts, 2, 0).size() == 4);
}

TEST_CASE("max_size caps non-reserved entries with lexicographic ties") {
  const std::vector<std::string> texts{"c b a a"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 2);
  CHECK(v.size() == 6);
  CHECK(v.Contains("a"));
  CHECK(v.Contains("b"));
  CHECK_FALSE(v.Contains("c"));
}

TEST_CASE("encode framing, normalization and unknowns") {
  const std::vector<std::string> texts{"a b"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 0);
  CHECK(Encode(v, "", true) == std::vector<TokenId>{kBos, kEos});
  CHECK(Encode(v, "A b", false) == std::vector<TokenId>{v.Id("a"), v.Id("b")});
  CHECK(Encode(v, "zzz", false) == std::vector<TokenId>{kUnk});
  const auto ids = Encode(v, "a b", true);
  CHECK(Decode(v, ids) == "a b");
}

TEST_CASE("encode is identical across threads") {
  const std::vector<std::string> texts{"the quick brown fox jumps over the lazy dog"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 0);
  const auto expected = Encode(v, texts[0], true);
  std::vector<std::vector<TokenId>> got(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i)
    threads.emplace_back([&, i] { got[static_cast<std::size_t>(i)] = Encode(v, texts[0], true); });
  for (auto& t : threads) t.join();
  for (const auto& g : got) CHECK(g == expected);
}

TEST_CASE("vocabulary save/load keeps ids") {
  const auto dir = TempDir("vocab");
  const std::vector<std::string> texts{"z y x y z z", "w"};
  const Vocabulary v = Vocabulary::Build(texts, 1, 0);
  v.Save(dir / "vocab.jsonl");
  const Vocabulary back = Vocabulary::Load(dir / "vocab.jsonl");
  CHECK(back == v);
  CHECK(back.Hash() == v.Hash());
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(back.Id(v.Token(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
}

TEST_CASE("corpus loading") {
  const auto dir = TempDir("corpus");
  {
    std::ofstream(dir / "empty.jsonl");
  }
  CHECK(LoadCorpus(dir / "empty.jsonl").empty());

  std::ofstream(dir / "two.jsonl") << R"({"doc_id":"d1","text":"alpha"})" "\n"
                                   << R"({"doc_id":"d2","title":"T","text":"beta"})" "\n";
  const Corpus c = LoadCorpus(dir / "two.jsonl");
  CHECK(c.size() == 2);
  CHECK(c.Get("d2").FullText() == "T beta");

  std::ofstream(dir / "dup.jsonl") << R"({"doc_id":"d1","text":"alpha"})" "\n"
                                   << R"({"doc_id":"d1","text":"beta"})" "\n";
  try {
    LoadCorpus(dir / "dup.jsonl");
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicate);
    CHECK(std::string(e.what()).find("d1") != std::string::npos);
  }
  CHECK(CodeOf([&] { LoadCorpus(dir / "missing.jsonl"); }) == ErrorCode::kIo);
}

TEST_CASE("query records round-trip and validate references") {
  const auto dir = TempDir("queries");
  std::vector<QueryRecord> qs(2);
  qs[0] = {"q1", "capital of france", std::string("Paris"), {"d1"}, std::nullopt};
  qs[1] = {"q2", "no gold", std::nullopt, {}, std::string("context")};
  SaveQueries(dir / "q.jsonl", qs);
  CHECK(LoadQueries(dir / "q.jsonl") == qs);

  Corpus c;
  c.Add({"d2", std::nullopt, "text"});
  CHECK(CodeOf([&] { LoadQueries(dir / "q.jsonl", &c); }).has_value());
}

TEST_CASE("run files") {
  const auto dir = TempDir("runs");
  SUBCASE("empty run round-trips") {
    WriteRun(dir / "empty.jsonl", Run{});
    CHECK(ReadRun(dir / "empty.jsonl").entries.empty());
  }
  SUBCASE("one query round-trips exactly") {
    Run run;
    run.entries.push_back({"q1", {{"d1", -0.1}, {"d2", -0.3}}, std::string("paris")});
    WriteRun(dir / "one.jsonl", run);
    CHECK(ReadRun(dir / "one.jsonl") == run);
  }
  SUBCASE("unsorted ranking is rejected") {
    Run run;
    run.entries.push_back({"q1", {{"d1", -0.3}, {"d2", -0.1}}, std::nullopt});
    try {
      WriteRun(dir / "bad.jsonl", run);
      FAIL("unsorted ranking accepted");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("not sorted") != std::string::npos);
    }
  }
  SUBCASE("random runs round-trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> score(-50.0, 0.0);
    for (int trial = 0; trial < 50; ++trial) {
      Run run;
      const int n = static_cast<int>(rng() % 5);
      for (int q = 0; q < n; ++q) {
        RunEntry e{"q" + std::to_string(q), {}, std::nullopt};
        const int k = static_cast<int>(rng() % 6);
        std::vector<double> s(static_cast<std::size_t>(k));
        for (double& x : s) x = score(rng);
        std::sort(s.rbegin(), s.rend());
        for (int i = 0; i < k; ++i)
          e.ranking.push_back({"doc \"" + std::to_string(rng() % 100) + "\"", s[static_cast<std::size_t>(i)]});
        if (rng() % 2) e.answer = "ans\nwer " + std::to_string(q);
        run.entries.push_back(std::move(e));
      }
      WriteRun(dir / "rand.jsonl", run);
      CHECK(ReadRun(dir / "rand.jsonl") == run);
    }
  }
}

}  // namespace
}  // namespace genret
