// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Prefix tree over document identifier token sequences. It decides which
// tokens may legally follow a partial identifier during constrained decoding
// and maps completed identifiers back to documents.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "text.hpp"

namespace genret {

struct DocidSequence {
  std::string doc_id;
  std::vector<TokenId> tokens;  // EOS-terminated

  bool operator==(const DocidSequence&) const = default;
};

// Appends " #k" (k = 2, 3, ...) to texts whose normalized word sequence
// collides with an earlier doc id's (lexicographic doc id order). The first
// occurrence keeps its text.
std::map<std::string, std::string> Disambiguate(
    const std::map<std::string, std::string>& connector_texts);

// Encodes each text and appends EOS.
std::vector<DocidSequence> TokenizeDocids(
    const std::map<std::string, std::string>& texts, const Vocabulary& vocab);

class DocidTrie {
 public:
  using NodeId = std::int32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr NodeId kNoNode = -1;

  // Root only.
  DocidTrie();

  // Fails on a duplicate sequence or on one that is empty, lacks the final
  // EOS, or contains EOS before the end.
  static DocidTrie Build(std::span<const DocidSequence> sequences);

  // Sorted child tokens of `node`; empty for terminal nodes.
  std::span<const TokenId> Children(NodeId node) const;
  NodeId Child(NodeId node, TokenId token) const;
  NodeId Walk(std::span<const TokenId> prefix) const;

  // Empty when the prefix is not in the trie or ends at a terminal.
  std::vector<TokenId> AllowedNext(std::span<const TokenId> prefix) const;

  bool IsTerminal(NodeId node) const;
  // Doc id stored at a terminal node.
  const std::string& DocAt(NodeId node) const;

  // Fails with kNotFound ("unresolvable sequence") unless `tokens` spells a
  // complete root-to-terminal path.
  const std::string& Resolve(std::span<const TokenId> tokens) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t sequence_count() const { return doc_ids_.size(); }
  bool empty() const { return doc_ids_.empty(); }

  // Every stored sequence, ordered by token sequence.
  std::vector<DocidSequence> Sequences() const;

  // JSON-lines: a header, then one {doc_id, tokens} record per sequence.
  void Save(const std::filesystem::path& path) const;
  static DocidTrie Load(const std::filesystem::path& path);

 private:
  struct Node {
    std::uint32_t first_edge = 0;
    std::uint32_t edge_count = 0;
    std::int32_t doc = -1;
  };

  std::vector<Node> nodes_;
  std::vector<TokenId> edge_tokens_;
  std::vector<NodeId> edge_targets_;
  std::vector<std::string> doc_ids_;
};

}  // namespace genret
