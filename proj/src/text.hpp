// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Word-level tokenization and vocabulary.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace genret {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr TokenId kNumReserved = 4;

// Lowercases, maps every ASCII punctuation character except '#' to a space and
// splits on whitespace. Bytes >= 0x80 are kept as word characters.
std::vector<std::string> NormalizeWords(std::string_view text);

// NormalizeWords joined with single spaces.
std::string NormalizeText(std::string_view text);

class Vocabulary {
 public:
  // Reserved-only vocabulary.
  Vocabulary();

  // Keeps tokens seen at least `min_freq` times, most frequent first, ties
  // broken lexicographically. `max_size` caps the non-reserved entries; zero
  // means unbounded.
  static Vocabulary Build(std::span<const std::string> texts,
                          std::size_t min_freq, std::size_t max_size);

  static Vocabulary Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  TokenId Id(std::string_view token) const;
  const std::string& Token(TokenId id) const;
  bool Contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }

  // FNV-1a over the id-ordered token list; stored in model checkpoints.
  std::uint64_t Hash() const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  void Append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::vector<TokenId> Encode(const Vocabulary& vocab, std::string_view text,
                            bool add_bos_eos);

// Inverse of Encode for in-vocabulary text; reserved ids are dropped.
std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids);

bool IsStopword(std::string_view word);

}  // namespace genret
