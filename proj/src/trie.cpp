// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "trie.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "error.hpp"
#include "jsonl.hpp"

namespace genret {

namespace {

constexpr const char* kTrieFormat = "genret-docid-trie";
constexpr int kTrieVersion = 1;

}  // namespace

std::map<std::string, std::string> Disambiguate(
    const std::map<std::string, std::string>& connector_texts) {
  std::map<std::string, std::string> out;
  std::set<std::string> taken;
  // First pass claims every text's own normalized form in doc-id order so a
  // generated suffix never steals a later document's original identifier.
  std::map<std::string, std::string> normalized;
  for (const auto& [id, text] : connector_texts)
    normalized[id] = NormalizeText(text);
  std::set<std::string> originals;
  for (const auto& [id, norm] : normalized) originals.insert(norm);

  for (const auto& [id, text] : connector_texts) {
    const std::string& norm = normalized[id];
    if (taken.insert(norm).second) {
      out[id] = text;
      continue;
    }
    for (int k = 2;; ++k) {
      const std::string suffix = " #" + std::to_string(k);
      const std::string candidate = norm + suffix;
      if (originals.contains(candidate) || taken.contains(candidate)) continue;
      taken.insert(candidate);
      out[id] = text + suffix;
      break;
    }
  }
  return out;
}

std::vector<DocidSequence> TokenizeDocids(
    const std::map<std::string, std::string>& texts, const Vocabulary& vocab) {
  std::vector<DocidSequence> out;
  out.reserve(texts.size());
  for (const auto& [id, text] : texts) {
    std::vector<TokenId> tokens = Encode(vocab, text, false);
    tokens.push_back(kEos);
    out.push_back({id, std::move(tokens)});
  }
  return out;
}

DocidTrie::DocidTrie() : nodes_(1) {}

DocidTrie DocidTrie::Build(std::span<const DocidSequence> sequences) {
  // Pointer-style build, then flattened breadth-first into CSR arrays.
  struct BuildNode {
    std::map<TokenId, std::int32_t> children;
    std::int32_t doc = -1;
  };
  std::vector<BuildNode> tmp(1);
  DocidTrie trie;
  for (const DocidSequence& seq : sequences) {
    if (seq.tokens.empty() || seq.tokens.back() != kEos)
      Fail(ErrorCode::kInvalidArgument,
           "docid of '" + seq.doc_id + "' is not EOS-terminated");
    if (std::find(seq.tokens.begin(), seq.tokens.end() - 1, kEos) !=
        seq.tokens.end() - 1)
      Fail(ErrorCode::kInvalidArgument,
           "docid of '" + seq.doc_id + "' contains an inner EOS");
    std::int32_t node = 0;
    for (TokenId t : seq.tokens) {
      auto it = tmp[node].children.find(t);
      if (it == tmp[node].children.end()) {
        const auto next = static_cast<std::int32_t>(tmp.size());
        tmp[node].children.emplace(t, next);
        tmp.emplace_back();
        node = next;
      } else {
        node = it->second;
      }
    }
    if (tmp[node].doc >= 0)
      Fail(ErrorCode::kDuplicate,
           "duplicate docid sequence for '" + seq.doc_id + "' and '" +
               trie.doc_ids_[static_cast<std::size_t>(tmp[node].doc)] + "'");
    tmp[node].doc = static_cast<std::int32_t>(trie.doc_ids_.size());
    trie.doc_ids_.push_back(seq.doc_id);
  }

  std::vector<std::int32_t> order{0};
  std::vector<std::int32_t> remap(tmp.size(), -1);
  remap[0] = 0;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const auto& [tok, child] : tmp[static_cast<std::size_t>(order[i])].children) {
      remap[static_cast<std::size_t>(child)] = static_cast<std::int32_t>(order.size());
      order.push_back(child);
    }

  trie.nodes_.assign(order.size(), Node{});
  for (std::size_t i = 0; i < order.size(); ++i) {
    const BuildNode& b = tmp[static_cast<std::size_t>(order[i])];
    Node& n = trie.nodes_[i];
    n.doc = b.doc;
    n.first_edge = static_cast<std::uint32_t>(trie.edge_tokens_.size());
    n.edge_count = static_cast<std::uint32_t>(b.children.size());
    for (const auto& [tok, child] : b.children) {
      trie.edge_tokens_.push_back(tok);
      trie.edge_targets_.push_back(remap[static_cast<std::size_t>(child)]);
    }
  }
  return trie;
}

std::span<const TokenId> DocidTrie::Children(NodeId node) const {
  if (node < 0 || static_cast<std::size_t>(node) >= nodes_.size()) return {};
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  return {edge_tokens_.data() + n.first_edge, n.edge_count};
}

DocidTrie::NodeId DocidTrie::Child(NodeId node, TokenId token) const {
  std::span<const TokenId> kids = Children(node);
  auto it = std::lower_bound(kids.begin(), kids.end(), token);
  if (it == kids.end() || *it != token) return kNoNode;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  return edge_targets_[n.first_edge +
                       static_cast<std::size_t>(it - kids.begin())];
}

DocidTrie::NodeId DocidTrie::Walk(std::span<const TokenId> prefix) const {
  NodeId node = kRoot;
  for (TokenId t : prefix) {
    node = Child(node, t);
    if (node == kNoNode) return kNoNode;
  }
  return node;
}

std::vector<TokenId> DocidTrie::AllowedNext(
    std::span<const TokenId> prefix) const {
  std::span<const TokenId> kids = Children(Walk(prefix));
  return {kids.begin(), kids.end()};
}

bool DocidTrie::IsTerminal(NodeId node) const {
  return node >= 0 && static_cast<std::size_t>(node) < nodes_.size() &&
         nodes_[static_cast<std::size_t>(node)].doc >= 0;
}

const std::string& DocidTrie::DocAt(NodeId node) const {
  if (!IsTerminal(node)) Fail(ErrorCode::kNotFound, "unresolvable sequence");
  return doc_ids_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(node)].doc)];
}

const std::string& DocidTrie::Resolve(std::span<const TokenId> tokens) const {
  return DocAt(Walk(tokens));
}

std::vector<DocidSequence> DocidTrie::Sequences() const {
  std::vector<DocidSequence> out;
  std::vector<TokenId> path;
  // Depth-first over sorted children yields lexicographic order.
  auto visit = [&](auto&& self, NodeId node) -> void {
    if (IsTerminal(node)) out.push_back({DocAt(node), path});
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    for (std::uint32_t e = 0; e < n.edge_count; ++e) {
      path.push_back(edge_tokens_[n.first_edge + e]);
      self(self, edge_targets_[n.first_edge + e]);
      path.pop_back();
    }
  };
  visit(visit, kRoot);
  return out;
}

void DocidTrie::Save(const std::filesystem::path& path) const {
  std::vector<Json> records;
  records.push_back({{"format", kTrieFormat}, {"version", kTrieVersion}});
  for (const DocidSequence& s : Sequences())
    records.push_back({{"doc_id", s.doc_id}, {"tokens", s.tokens}});
  WriteJsonLines(path, records);
}

DocidTrie DocidTrie::Load(const std::filesystem::path& path) {
  std::vector<DocidSequence> seqs;
  bool header = false;
  ReadJsonLines(path, [&](const Json& r, std::size_t) {
    if (!header) {
      if (OptionalString(r, "format") != kTrieFormat)
        Fail(ErrorCode::kParse, "missing trie file header");
      if (!r.contains("version") || r["version"] != kTrieVersion)
        Fail(ErrorCode::kVersion, "unsupported trie file version");
      header = true;
      return;
    }
    seqs.push_back({RequireString(r, "doc_id"),
                    r.at("tokens").get<std::vector<TokenId>>()});
  });
  if (!header) Fail(ErrorCode::kParse, path.string() + ": empty trie file");
  return Build(seqs);
}

}  // namespace genret
