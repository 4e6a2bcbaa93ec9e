// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "pipeline.hpp"
#include "test_util.hpp"

namespace genret {
namespace {

using testing::CodeOf;

const std::filesystem::path kFixture = GENRET_FIXTURE_DIR;

class CountingBackend : public GenBackend {
 public:
  std::string Generate(const GenRequest& r) override {
    ++calls;
    if (fail_from >= 0 && calls > fail_from)
      Fail(ErrorCode::kBackendTransport, "backend down");
    return stub.Generate(r);
  }
  std::string name() const override { return "counting"; }
  int calls = 0;
  int fail_from = -1;  // fail every call after this many
  StubBackend stub;
};

// Untrained model over the synthetic fixture with title-based identifiers.
struct Setup {
  Corpus corpus = LoadCorpus(kFixture / "documents.jsonl");
  std::vector<QueryRecord> queries = LoadQueries(kFixture / "queries_test.jsonl", &corpus);
  std::map<std::string, std::string> texts = DocidTexts(corpus, false, 4);
  Vocabulary vocab = BuildPipelineVocab(corpus, texts, queries, {}, 1, 0);
  DocidTrie trie = DocidTrie::Build(TokenizeDocids(texts, vocab));
  Model model = Model::Init(Config(static_cast<int>(vocab.size())));

  static ModelConfig Config(int v) {
    ModelConfig c = testing::TinyConfig(v, 11);
    c.max_input_len = 96;
    c.max_output_len = 32;
    return c;
  }
  InferenceOptions Options() const {
    InferenceOptions o;
    o.beam.beam_size = 5;
    o.max_answer_len = 4;
    return o;
  }
};

TEST_CASE("pseudo data has exactly k pairs per document") {
  const Corpus corpus = LoadCorpus(kFixture / "documents.jsonl");
  REQUIRE(corpus.size() == 100);
  StubBackend stub;
  const auto pairs = GenPseudoData(corpus, 10, stub, 5, 64);
  CHECK(pairs.size() == 1000);
  std::map<std::string, int> per_doc;
  for (const PseudoPair& p : pairs) {
    ++per_doc[p.doc_id];
    CHECK_FALSE(NormalizeWords(p.pseudo_answer).empty());
    const auto q = NormalizeWords(p.pseudo_query);
    CHECK(q.size() >= 3);
    CHECK(q.size() <= 8);
    CHECK(p.input_text.rfind(p.pseudo_query + " " + kContextSeparator + " ", 0) == 0);
    // The answer is the sentence the query words come from.
    for (const std::string& w : q)
      CHECK(NormalizeWords(p.pseudo_answer).end() !=
            std::find(NormalizeWords(p.pseudo_answer).begin(),
                      NormalizeWords(p.pseudo_answer).end(), w));
  }
  CHECK(per_doc.size() == 100);
  for (const auto& [id, n] : per_doc) CHECK(n == 10);

  CHECK(GenPseudoData(corpus, 10, stub, 5, 64) == pairs);
  CHECK(GenPseudoData(corpus, 10, stub, 5, 64, 3) == pairs);
  CHECK(GenPseudoData(corpus, 10, stub, 6, 64) != pairs);
  CHECK(CodeOf([&] { GenPseudoData(corpus, 0, stub, 5, 64); }) == ErrorCode::kInvalidArgument);

  const auto dir = testing::TempDir("pseudo");
  SavePseudo(dir / "p.jsonl", pairs);
  CHECK(LoadPseudo(dir / "p.jsonl") == pairs);
}

TEST_CASE("pseudo inputs fit the encoder length") {
  Setup s;
  StubBackend stub;
  const auto pairs = GenPseudoData(s.corpus, 2, stub, 1, 24);
  for (const PseudoPair& p : pairs) CHECK(Encode(s.vocab, p.input_text, true).size() <= 24);
}

TEST_CASE("fine-tuning items and stage separation") {
  Setup s;
  const DocidMap docids = DocidsFromTrie(s.trie);
  std::vector<QueryRecord> qs(s.queries.begin(), s.queries.begin() + 4);
  qs[0].q_connector = "connector zero";
  qs[1].q_connector = "connector one";
  qs[1].answer.reset();
  std::vector<SkippedQuery> skipped;
  const auto items = FinetuneItems(qs, docids, s.vocab, true, &skipped);
  CHECK(items.size() == 1);
  CHECK(items[0].source == qs[0].query_id);
  CHECK(items[0].stage == Stage::kFinetune);
  CHECK(items[0].example.docid_target.back() == kEos);
  CHECK(items[0].example.answer_target.back() == kEos);
  CHECK(s.trie.Resolve(items[0].example.docid_target) == qs[0].relevant_doc_ids[0]);
  REQUIRE(skipped.size() == 3);
  CHECK(skipped[0].reason == "missing answer");
  CHECK(skipped[1].reason == "missing q_connector");

  // Without Q-Connectors the raw query is the input.
  CHECK(FinetuneItems(qs, docids, s.vocab, false, nullptr).size() == 3);

  std::vector<QueryRecord> none(s.queries.begin(), s.queries.begin() + 3);
  const auto empty = FinetuneItems(none, docids, s.vocab, true, nullptr);
  CHECK(empty.empty());
  StageOptions opt;
  CHECK(CodeOf([&] { TrainStage(s.model, empty, Stage::kFinetune, opt); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { TrainStage(s.model, items, Stage::kPretrain, opt); }) ==
        ErrorCode::kState);
  opt.allow_mixed = true;
  opt.train.batch_size = 1;
  CHECK(TrainStage(s.model, items, Stage::kPretrain, opt).size() == 1);
}

TEST_CASE("one pre-training epoch lowers the joint loss") {
  Setup s;
  StubBackend stub;
  const auto pairs = GenPseudoData(s.corpus, 2, stub, 3, 48);
  const auto items = PretrainItems(pairs, DocidsFromTrie(s.trie), s.vocab);
  CHECK(items.size() == 200);
  StageOptions opt;
  opt.train.learning_rate = 3e-3;
  opt.train.batch_size = 8;
  opt.train.warmup_steps = 2;
  opt.train.dropout = 0.0;
  int epochs = 0;
  opt.on_epoch = [&](int e) { epochs = e; };
  const auto steps = TrainStage(s.model, items, Stage::kPretrain, opt);
  CHECK(epochs == 1);
  REQUIRE(steps.size() == 25);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += steps[static_cast<std::size_t>(i)].joint;
    tail += steps[steps.size() - 1 - static_cast<std::size_t>(i)].joint;
  }
  CHECK(tail < head);
  const auto none = PretrainItems({}, DocidsFromTrie(s.trie), s.vocab);
  CHECK(CodeOf([&] { TrainStage(s.model, none, Stage::kPretrain, opt); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("base inference reuses precomputed connectors") {
  Setup s;
  Engine engine(s.model, s.trie, s.vocab, s.corpus, s.Options());
  CountingBackend backend;
  QueryRecord q = s.queries[0];
  q.q_connector = "a precomputed connector about rikeli";
  const IterState st = engine.RunBase(q, backend);
  CHECK(backend.calls == 0);
  CHECK(st.round == 0);
  CHECK(st.q_connector == *q.q_connector);
  CHECK_FALSE(st.ranking.empty());
  CHECK(st.ranking.size() <= 5);
  for (const RetrievedDoc& d : st.ranking) CHECK(s.trie.Resolve(d.tokens) == d.doc_id);

  q.q_connector.reset();
  engine.RunBase(q, backend);
  CHECK(backend.calls == 1);
}

TEST_CASE("iterative inference") {
  Setup s;
  const auto dir = testing::TempDir("iter");
  s.model.Save(dir / "before.ckpt", s.vocab.Hash());
  Engine engine(s.model, s.trie, s.vocab, s.corpus, s.Options());
  CountingBackend backend;
  const QueryRecord& q = s.queries[1];

  const IterOutcome zero = engine.RunIter(q, backend, 0);
  REQUIRE(zero.rounds.size() == 1);
  const IterState base = engine.RunBase(q, backend);
  CHECK(zero.rounds[0].q_connector == base.q_connector);
  CHECK(zero.rounds[0].answer == base.answer);
  REQUIRE(zero.rounds[0].ranking.size() == base.ranking.size());
  for (std::size_t i = 0; i < base.ranking.size(); ++i) {
    CHECK(zero.rounds[0].ranking[i].doc_id == base.ranking[i].doc_id);
    CHECK(zero.rounds[0].ranking[i].log_score == base.ranking[i].log_score);
  }

  const IterOutcome two = engine.RunIter(q, backend, 2);
  CHECK(two.rounds.size() == 3);
  CHECK_FALSE(two.partial);
  for (int r = 0; r < 3; ++r) CHECK(two.rounds[static_cast<std::size_t>(r)].round == r);
  CHECK(two.rounds[1].q_connector != two.rounds[0].q_connector);
  CHECK(CodeOf([&] { engine.RunIter(q, backend, -1); }) == ErrorCode::kInvalidArgument);

  s.model.Save(dir / "after.ckpt", s.vocab.Hash());
  CHECK(ReadFile(dir / "before.ckpt") == ReadFile(dir / "after.ckpt"));
}

TEST_CASE("a backend failure mid-loop keeps the finished rounds") {
  Setup s;
  Engine engine(s.model, s.trie, s.vocab, s.corpus, s.Options());
  CountingBackend backend;
  backend.fail_from = 2;  // base connector and round 1 succeed
  const IterOutcome out = engine.RunIter(s.queries[2], backend, 3);
  CHECK(out.partial);
  CHECK(out.rounds.size() == 2);
  CHECK(out.error.find("backend down") != std::string::npos);

  const std::vector<QueryRecord> qs{s.queries[2]};
  const std::vector<IterOutcome> outs{out};
  CHECK(RoundRun(qs, outs, 1, true, false).entries.size() == 1);
  CHECK(RoundRun(qs, outs, 2, true, false).entries.empty());
}

TEST_CASE("parallel query inference matches sequential") {
  Setup s;
  Engine engine(s.model, s.trie, s.vocab, s.corpus, s.Options());
  const std::vector<QueryRecord> qs(s.queries.begin(), s.queries.begin() + 6);
  StubBackend a, b;
  const auto seq = RunQueries(engine, qs, a, 1, 1);
  const auto par = RunQueries(engine, qs, b, 1, 3);
  CHECK(RoundRun(qs, seq, 1, true, false) == RoundRun(qs, par, 1, true, false));
}

Run MakeRun(std::initializer_list<std::pair<std::string, std::vector<std::string>>> rows) {
  Run run;
  for (const auto& [id, docs] : rows) {
    RunEntry e{id, {}, std::nullopt};
    double score = -1.0;
    for (const std::string& d : docs) e.ranking.push_back({d, score--});
    run.entries.push_back(e);
  }
  return run;
}

TEST_CASE("evaluation reports") {
  const std::vector<QueryRecord> gold{{"q1", "first?", "Paris", {"d1"}, std::nullopt},
                                      {"q2", "second?", "Rome", {"d2"}, std::nullopt}};
  metrics::MetricConfig mc;

  Run perfect = MakeRun({{"q1", {"d1", "d3"}}, {"q2", {"d2"}}});
  perfect.entries[0].answer = "paris";
  perfect.entries[1].answer = "Rome.";
  const Json p = EvaluateRun(perfect, gold, mc, "perfect", "h");
  CHECK(p["aggregate"]["mrr@10"] == 1.0);
  CHECK(p["aggregate"]["em"] == 1.0);
  CHECK(p["aggregate"]["r@1"] == 1.0);
  CHECK(p["run_id"] == "perfect");
  CHECK(p["config_hash"] == "h");
  CHECK(p["per_query"].size() == 2);
  CHECK(p["per_query"][0]["rank_of_gold"] == 1);

  const Json half = EvaluateRun(MakeRun({{"q1", {"d1"}}, {"q2", {"d7", "d8"}}}), gold, mc, "r", "h");
  CHECK(std::abs(half["aggregate"]["mrr@10"].get<double>() - 0.5) < 1e-12);
  CHECK(half["per_query"][1]["rank_of_gold"].is_null());
  CHECK(half["aggregate"]["em"] == 0.0);

  CHECK(CodeOf([&] { EvaluateRun(Run{}, gold, mc, "r", "h"); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { EvaluateRun(MakeRun({{"q9", {"d1"}}}), gold, mc, "r", "h"); }) ==
        ErrorCode::kNotFound);

  const auto [mrr, qa] = CurvePoint(p, mc);
  CHECK(mrr == 1.0);
  CHECK(qa == 1.0);
}

TEST_CASE("evaluation metrics stay in the unit interval") {
  std::mt19937_64 rng(8);
  std::vector<QueryRecord> gold;
  for (int i = 0; i < 20; ++i)
    gold.push_back({"q" + std::to_string(i), "x", "answer words " + std::to_string(i % 3),
                    {"d" + std::to_string(i % 7)}, std::nullopt});
  for (int trial = 0; trial < 50; ++trial) {
    Run run;
    for (const QueryRecord& q : gold) {
      if (rng() % 3 == 0) continue;
      RunEntry e{q.query_id, {}, "answer " + std::to_string(rng() % 4)};
      const int n = static_cast<int>(rng() % 12);
      for (int k = 0; k < n; ++k) e.ranking.push_back({"d" + std::to_string(rng() % 9), -k * 1.0});
      run.entries.push_back(e);
    }
    if (run.entries.empty()) continue;
    const Json r = EvaluateRun(run, gold, metrics::MetricConfig{}, "r", "h");
    for (const auto& [key, v] : r["aggregate"].items()) {
      CHECK(v.get<double>() >= 0.0);
      CHECK(v.get<double>() <= 1.0);
    }
  }
}

}  // namespace
}  // namespace genret
