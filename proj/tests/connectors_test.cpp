// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "connectors.hpp"
#include "corpus.hpp"
#include "jsonl.hpp"
#include "test_util.hpp"

namespace genret {
namespace {

using testing::CodeOf;

std::string Golden(const std::string& name) {
  return ReadFile(std::filesystem::path(GENRET_TEST_DATA_DIR) / "golden" / name);
}

// Records requests and answers with the stub.
class RecordingBackend : public GenBackend {
 public:
  std::string Generate(const GenRequest& r) override {
    requests.push_back(r);
    return stub.Generate(r);
  }
  std::string name() const override { return "recording"; }
  std::vector<GenRequest> requests;
  StubBackend stub;
};

class FixedBackend : public GenBackend {
 public:
  explicit FixedBackend(std::string text) : text_(std::move(text)) {}
  std::string Generate(const GenRequest&) override { return text_; }
  std::string name() const override { return "fixed"; }

 private:
  std::string text_;
};

const Document kEiffel{"d1", std::nullopt, "The Eiffel Tower is in Paris."};

TEST_CASE("rendered prompts match the golden templates") {
  CHECK(PromptTemplate::For(PromptKind::kDConnector)
            .Render({{"m", "32"}, {"d", "The Eiffel Tower is in Paris."}}) ==
        Golden("d_connector.txt"));
  CHECK(PromptTemplate::For(PromptKind::kQConnector)
            .Render({{"n", "64"}, {"q", "who built the eiffel tower?"}}) ==
        Golden("q_connector.txt"));
  CHECK(PromptTemplate::For(PromptKind::kIterQConnector)
            .Render({{"n", "64"},
                     {"d", "The Eiffel Tower is in Paris."},
                     {"a", "gustave eiffel"},
                     {"q", "who built the eiffel tower?"}}) == Golden("iter_q_connector.txt"));
}

TEST_CASE("prompt rendering examples and contract") {
  const std::string d =
      PromptTemplate::For(PromptKind::kDConnector).Render({{"m", "32"}, {"d", "X"}});
  CHECK(d.rfind("Summarize the key information of the following document in about 32 words.", 0) == 0);
  const std::string q =
      PromptTemplate::For(PromptKind::kQConnector).Render({{"n", "64"}, {"q", "who?"}});
  CHECK(q.rfind("Write a context to the following question in about 64 words.", 0) == 0);
  CHECK(CodeOf([] {
          PromptTemplate::For(PromptKind::kIterQConnector)
              .Render({{"n", "1"}, {"d", "x"}, {"q", "y"}});
        }) == ErrorCode::kInvalidArgument);
  // Substituted text is not re-scanned for placeholders.
  CHECK(PromptTemplate::For(PromptKind::kQConnector).Render({{"n", "{q}"}, {"q", "{n}"}}) ==
        "Write a context to the following question in about {q} words.\nQuestion:{n}");
}

TEST_CASE("stub D-Connector takes the leading words") {
  StubBackend stub;
  const Document doc{"d1", std::nullopt, "alpha beta gamma delta"};
  CHECK(GenDConnector(doc, 3, stub) == "alpha beta gamma");
  CHECK(GenDConnector(doc, 3, stub) == GenDConnector(doc, 3, stub));
  const Document empty{"d2", std::nullopt, ""};
  CHECK(CodeOf([&] { GenDConnector(empty, 3, stub); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { GenDConnector(doc, 0, stub); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("D-Connector prompt carries the document") {
  RecordingBackend rec;
  GenDConnector(kEiffel, 32, rec);
  REQUIRE(rec.requests.size() == 1);
  CHECK(rec.requests[0].prompt == Golden("d_connector.txt"));
  CHECK(rec.requests[0].length == 32);
  GenDConnector(kEiffel, 32, rec, 3);
  CHECK(rec.requests[1].prompt.find("Document:The Eiffel Tower") != std::string::npos);
  CHECK(rec.requests[1].prompt.find("Paris") == std::string::npos);
}

TEST_CASE("stub Q-Connector keeps the query terms") {
  StubBackend stub;
  const std::string c = GenQConnector("capital of france", 64, stub);
  CHECK(c.find("capital") != std::string::npos);
  CHECK(c.find("france") != std::string::npos);
  CHECK(c == GenQConnector("capital of france", 64, stub));
  CHECK(CodeOf([&] { GenQConnector("", 64, stub); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { GenQConnector("   ", 64, stub); }) == ErrorCode::kInvalidArgument);
  RecordingBackend rec;
  GenQConnector("who built the eiffel tower?", 64, rec);
  CHECK(rec.requests.at(0).prompt == Golden("q_connector.txt"));
}

TEST_CASE("stub iteration connector includes a sentence of each top document") {
  StubBackend stub;
  const Document gold{"g", std::nullopt, "The secret code of zorvak is mibu. Filler text here."};
  const Document other{"o", std::nullopt, "Unrelated words. More words."};
  IterPromptOptions opt;
  const std::string c = GenIterQConnector("code of zorvak?", {&other, &gold}, "mibu", opt, stub);
  CHECK(c.find("The secret code of zorvak is mibu.") != std::string::npos);
  CHECK(c == GenIterQConnector("code of zorvak?", {&other, &gold}, "mibu", opt, stub));
  opt.k_docs = 0;
  CHECK(CodeOf([&] { GenIterQConnector("q", {&gold}, "a", opt, stub); }) ==
        ErrorCode::kInvalidArgument);
  opt.k_docs = 3;
  CHECK(CodeOf([&] { GenIterQConnector("q", {}, "a", opt, stub); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("iteration prompt truncates and limits documents") {
  RecordingBackend rec;
  const Document a{"a", std::nullopt, "one two three four five"};
  const Document b{"b", std::nullopt, "six seven"};
  const Document c{"c", std::nullopt, "eight"};
  IterPromptOptions opt;
  opt.n = 64;
  opt.k_docs = 2;
  opt.max_doc_words = 3;
  GenIterQConnector("q?", {&a, &b, &c}, "ans", opt, rec);
  REQUIRE(rec.requests.size() == 1);
  CHECK(rec.requests[0].documents.size() == 2);
  CHECK(rec.requests[0].prompt.find("Document:one two three\nsix seven \nAnswer:ans \nQuestion:q?") !=
        std::string::npos);

  RecordingBackend golden;
  GenIterQConnector("who built the eiffel tower?", {&kEiffel}, "gustave eiffel", IterPromptOptions{},
                    golden);
  CHECK(golden.requests.at(0).prompt == Golden("iter_q_connector.txt"));
}

TEST_CASE("gold-injecting stub adds the gold text only to iteration prompts") {
  GoldInjectingStub oracle(std::map<std::string, std::string>{{"code of zorvak?", "GOLD TEXT"}});
  StubBackend stub;
  const Document d{"x", std::nullopt, "Some sentence. Another."};
  IterPromptOptions opt;
  const std::string base = GenIterQConnector("code of zorvak?", {&d}, "", opt, stub);
  const std::string injected = GenIterQConnector("code of zorvak?", {&d}, "", opt, oracle);
  CHECK(injected == base + " GOLD TEXT");
  CHECK(GenQConnector("code of zorvak?", 64, oracle) == GenQConnector("code of zorvak?", 64, stub));
  CHECK(GenIterQConnector("other?", {&d}, "", opt, oracle) ==
        GenIterQConnector("other?", {&d}, "", opt, stub));
}

TEST_CASE("empty backend output is a protocol error") {
  FixedBackend blank("   ");
  CHECK(CodeOf([&] { GenDConnector(kEiffel, 8, blank); }) == ErrorCode::kBackendProtocol);
  CHECK(CodeOf([&] { GenQConnector("q", 8, blank); }) == ErrorCode::kBackendProtocol);
}

TEST_CASE("connector texts survive normalization and tokenization") {
  StubBackend stub;
  const Document doc{"d", std::string("Title!"), "Ünïcode, punctuation... and #hash tags?"};
  for (const std::string& text : {GenDConnector(doc, 5, stub), GenQConnector("Ünï? #1", 5, stub)}) {
    const auto words = NormalizeWords(text);
    CHECK_FALSE(words.empty());
    const std::vector<std::string> texts{text};
    const Vocabulary v = Vocabulary::Build(texts, 1, 0);
    for (TokenId t : Encode(v, text, false)) CHECK(t != kUnk);
  }
}

TEST_CASE("sentence splitting and first paragraph") {
  CHECK(SplitSentences("A b. C d! E f? G") == std::vector<std::string>{"A b.", "C d!", "E f?", "G"});
  CHECK(SplitSentences("").empty());
  CHECK(FirstParagraph("  line one\nline two\n\nsecond para") == "line one\nline two");
  CHECK(FirstParagraph("\n\nonly after blank") == "only after blank");
}

TEST_CASE("response cache") {
  const auto dir = testing::TempDir("cache");
  ResponseCache cache(dir);
  std::string out;
  CHECK_FALSE(cache.Lookup("m", "prompt", &out));
  cache.Store("m", "prompt", "response text");
  CHECK(cache.Lookup("m", "prompt", &out));
  CHECK(out == "response text");
  CHECK_FALSE(cache.Lookup("other-model", "prompt", &out));
  CHECK_FALSE(cache.Lookup("m", "prompt2", &out));
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
}

}  // namespace
}  // namespace genret
