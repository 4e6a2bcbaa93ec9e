// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Documents, queries, connector texts and run files.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace genret {

struct Document {
  std::string doc_id;
  std::optional<std::string> title;
  std::string text;

  // Title (when present) followed by the body.
  std::string FullText() const;

  bool operator==(const Document&) const = default;
};

struct QueryRecord {
  std::string query_id;
  std::string query;
  std::optional<std::string> answer;
  std::vector<std::string> relevant_doc_ids;
  std::optional<std::string> q_connector;

  bool operator==(const QueryRecord&) const = default;
};

class Corpus {
 public:
  // Fails with kDuplicate on a repeated id and kInvalidArgument on an empty
  // id or text.
  void Add(Document doc);

  const Document* Find(const std::string& doc_id) const;
  const Document& Get(const std::string& doc_id) const;
  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  // D-Connector text keyed by doc id. Keys must name corpus documents.
  void SetConnector(const std::string& doc_id, std::string text);
  const std::map<std::string, std::string>& d_connectors() const {
    return d_connectors_;
  }

 private:
  std::vector<Document> documents_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string> d_connectors_;
};

Corpus LoadCorpus(const std::filesystem::path& path);
void SaveCorpus(const std::filesystem::path& path, const Corpus& corpus);

// Reads {doc_id, d_connector} lines into `corpus`.
void LoadConnectors(const std::filesystem::path& path, Corpus& corpus);
void SaveConnectors(const std::filesystem::path& path,
                    const std::map<std::string, std::string>& connectors);

// When `corpus` is given, every relevant doc id must resolve in it.
std::vector<QueryRecord> LoadQueries(const std::filesystem::path& path,
                                     const Corpus* corpus = nullptr);
void SaveQueries(const std::filesystem::path& path,
                 const std::vector<QueryRecord>& queries);

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const RankedDoc&) const = default;
};

struct RunEntry {
  std::string query_id;
  std::vector<RankedDoc> ranking;
  std::optional<std::string> answer;

  bool operator==(const RunEntry&) const = default;
};

struct Run {
  std::vector<RunEntry> entries;

  bool operator==(const Run&) const = default;
};

// The first line of every run file is a header record. Rankings must be
// sorted by non-increasing score with finite scores.
void WriteRun(const std::filesystem::path& path, const Run& run);
Run ReadRun(const std::filesystem::path& path);

}  // namespace genret
