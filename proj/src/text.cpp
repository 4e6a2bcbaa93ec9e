// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "text.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "error.hpp"
#include "jsonl.hpp"

namespace genret {

namespace {

constexpr std::array<std::string_view, 4> kReservedTokens = {
    "<pad>", "<unk>", "<s>", "</s>"};

bool IsWordByte(unsigned char c) {
  if (c >= 0x80) return true;
  return std::isalnum(c) != 0 || c == '#';
}

}  // namespace

std::vector<std::string> NormalizeWords(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsWordByte(c)) {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string NormalizeText(std::string_view text) {
  std::string out;
  for (const std::string& w : NormalizeWords(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : kReservedTokens) Append(std::string(t));
}

void Vocabulary::Append(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(std::span<const std::string> texts,
                             std::size_t min_freq, std::size_t max_size) {
  Require(min_freq >= 1, "min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const std::string& text : texts)
    for (std::string& w : NormalizeWords(text)) ++counts[std::move(w)];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts)
    if (count >= min_freq) kept.emplace_back(token, count);
  // counts is already lexicographic, so a stable sort by frequency keeps
  // lexicographic order among ties.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  if (max_size > 0 && kept.size() > max_size) kept.resize(max_size);

  Vocabulary vocab;
  for (auto& [token, count] : kept) vocab.Append(std::move(token));
  return vocab;
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::vector<std::pair<TokenId, std::string>> entries;
  ReadJsonLines(path, [&](const Json& r, std::size_t) {
    if (!r.contains("id") || !r["id"].is_number_integer())
      Fail(ErrorCode::kParse, "missing integer field 'id'");
    entries.emplace_back(r["id"].get<TokenId>(), RequireString(r, "token"));
  });
  std::sort(entries.begin(), entries.end());
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.ids_.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [id, token] = entries[i];
    if (id != static_cast<TokenId>(i))
      Fail(ErrorCode::kParse, path.string() + ": token ids are not 0..n-1");
    if (i < kReservedTokens.size() && token != kReservedTokens[i])
      Fail(ErrorCode::kParse, path.string() + ": reserved id " +
                                  std::to_string(i) + " is not " +
                                  std::string(kReservedTokens[i]));
    if (vocab.ids_.contains(token))
      Fail(ErrorCode::kParse, path.string() + ": duplicate token " + token);
    vocab.Append(token);
  }
  if (vocab.size() < kReservedTokens.size())
    Fail(ErrorCode::kParse, path.string() + ": reserved tokens missing");
  return vocab;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::vector<Json> records;
  records.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    records.push_back({{"token", tokens_[i]}, {"id", i}});
  WriteJsonLines(path, records);
}

TokenId Vocabulary::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::Token(TokenId id) const {
  Require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(),
          "token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

std::uint64_t Vocabulary::Hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::string& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<TokenId> Encode(const Vocabulary& vocab, std::string_view text,
                            bool add_bos_eos) {
  std::vector<TokenId> ids;
  if (add_bos_eos) ids.push_back(kBos);
  for (const std::string& w : NormalizeWords(text)) ids.push_back(vocab.Id(w));
  if (add_bos_eos) ids.push_back(kEos);
  return ids;
}

std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) {
    if (id < kNumReserved) continue;
    if (!out.empty()) out += ' ';
    out += vocab.Token(id);
  }
  return out;
}

bool IsStopword(std::string_view word) {
  static constexpr std::array<std::string_view, 58> kStopwords = {
      "a",     "about", "an",   "and",   "are",  "as",    "at",   "be",
      "been",  "but",   "by",   "can",   "did",  "do",    "does", "for",
      "from",  "had",   "has",  "have",  "he",   "her",   "his",  "how",
      "i",     "in",    "into", "is",    "it",   "its",   "me",   "my",
      "not",   "of",    "on",   "or",    "she",  "so",    "that", "the",
      "their", "them",  "then", "there", "they", "this",  "to",   "was",
      "we",    "were",  "what", "when",  "where", "which", "who",  "why",
      "will",  "with"};
  return std::find(kStopwords.begin(), kStopwords.end(), word) !=
         kStopwords.end();
}

}  // namespace genret
