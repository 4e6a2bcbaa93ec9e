// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "metrics.hpp"
#include "test_util.hpp"

namespace genret::metrics {
namespace {

using S = std::vector<std::string>;

TEST_CASE("reciprocal rank") {
  const S ranking{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k"};
  CHECK(ReciprocalRankAtK(ranking, {"a"}, 10) == 1.0);
  CHECK(ReciprocalRankAtK(ranking, {"c"}, 10) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(ReciprocalRankAtK(ranking, {"k"}, 10) == 0.0);
  CHECK(ReciprocalRankAtK(ranking, {"z"}, 10) == 0.0);
  CHECK(ReciprocalRankAtK({}, {"a"}, 10) == 0.0);
}

TEST_CASE("recall") {
  CHECK(RecallAtK(S{"x", "a", "y"}, {"a"}, 5) == 1.0);
  CHECK(RecallAtK(S{"a", "x", "y"}, {"a", "b"}, 3) == 0.5);
  CHECK(RecallAtK(S{"x", "y", "a"}, {"a"}, 2) == 0.0);
  CHECK(testing::CodeOf([] { RecallAtK(S{"a"}, {}, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("bleu-1") {
  CHECK(Bleu1("the cat sat", S{"the cat sat"}) == 1.0);
  CHECK(std::abs(Bleu1("the cat", S{"the cat sat"}) - std::exp(-0.5)) < 1e-9);
  CHECK(Bleu1("", S{"the cat"}) == 0.0);
  // Clipping: "the" counts at most once.
  CHECK(std::abs(Bleu1("the the the", S{"the cat sat"}) - 1.0 / 3) < 1e-12);
  // Closest reference length, shorter on ties.
  CHECK(Bleu1("a b", S{"a b c d", "a b"}) == 1.0);
}

TEST_CASE("rouge-l") {
  CHECK(RougeL("the cat sat", "the cat sat") == 1.0);
  CHECK(std::abs(RougeL("the cat sat", "the cat") - 0.8) < 1e-9);
  CHECK(RougeL("alpha beta", "gamma delta") == 0.0);
  CHECK(RougeL("", "x") == 0.0);
  // beta > 1 weights recall: P = 1/3, R = 1, beta = 2 -> 5PR / (R + 4P).
  CHECK(std::abs(RougeL("a b c", "a", 2.0) - (5.0 / 3) / (1.0 + 4.0 / 3)) < 1e-12);
}

TEST_CASE("answer normalization") {
  CHECK(NormalizeAnswer("The Eiffel Tower.") == "eiffel tower");
  CHECK(NormalizeAnswer("") == "");
  CHECK(NormalizeAnswer("a  a") == "");
  CHECK(NormalizeAnswer("An apple, the end") == "apple end");
}

TEST_CASE("exact match") {
  CHECK(ExactMatch("Paris.", S{"paris"}) == 1);
  CHECK(ExactMatch("paris france", S{"paris"}) == 0);
  CHECK(ExactMatch("", S{"paris"}) == 0);
  CHECK(ExactMatch("rome", S{"paris", "Rome"}) == 1);
}

TEST_CASE("token f1") {
  CHECK(TokenF1("the eiffel tower", S{"eiffel tower"}) == 1.0);
  CHECK(std::abs(TokenF1("paris rome", S{"paris"}) - 2.0 / 3) < 1e-9);
  CHECK(TokenF1("the", S{"a"}) == 1.0);
  CHECK(TokenF1("", S{"paris"}) == 0.0);
  CHECK(TokenF1("paris", S{"rome", "paris"}) == 1.0);
}

TEST_CASE("metric config validation") {
  MetricConfig c;
  CHECK_NOTHROW(c.Validate());
  c.k_values = {5, 1};
  CHECK(testing::CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
  c = MetricConfig{};
  c.qa_metric = "bleu4";
  CHECK(testing::CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
}

std::string RandomText(std::mt19937_64& rng) {
  static const S words{"the", "a", "an", "cat", "Cat.", "sat", "on", "mat", "paris", "x"};
  std::string out;
  const int n = static_cast<int>(rng() % 7);
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + words[rng() % words.size()];
  return out;
}

TEST_CASE("range, ordering, identity and symmetry properties") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::string a = RandomText(rng), b = RandomText(rng);
    const S golds{b, RandomText(rng)};
    const double bleu = Bleu1(a, golds), rouge = RougeL(a, b), f1 = TokenF1(a, golds);
    const int em = ExactMatch(a, golds);
    for (double v : {bleu, rouge, f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(static_cast<double>(em) <= f1);
    CHECK(RougeL(a, b) == doctest::Approx(RougeL(b, a)).epsilon(1e-12));
    if (!NormalizeWords(a).empty()) {
      CHECK(Bleu1(a, S{a}) == doctest::Approx(1.0));
      CHECK(RougeL(a, a) == doctest::Approx(1.0));
    }

    S ranking;
    const int n = static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) ranking.push_back("d" + std::to_string(rng() % 20));
    std::set<std::string> relevant{"d" + std::to_string(rng() % 20)};
    if (rng() % 2) relevant.insert("d" + std::to_string(rng() % 20));
    double prev_r = 0.0, prev_rr = 0.0;
    for (int k = 1; k <= 16; ++k) {
      const double r = RecallAtK(ranking, relevant, k);
      const double rr = ReciprocalRankAtK(ranking, relevant, k);
      CHECK(r >= prev_r);
      CHECK(rr >= prev_rr);
      CHECK(r <= 1.0);
      CHECK(rr <= 1.0);
      prev_r = r;
      prev_rr = rr;
    }
  }
}

}  // namespace
}  // namespace genret::metrics
