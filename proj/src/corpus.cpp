// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "corpus.hpp"

#include <cmath>
#include <set>

#include "error.hpp"
#include "jsonl.hpp"

namespace genret {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRunFormat = "genret-run";
constexpr int kRunVersion = 1;

std::optional<std::string> OptionalField(const Json& r, const char* key) {
  auto it = r.find(key);
  if (it == r.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    Fail(ErrorCode::kParse, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

std::string Document::FullText() const {
  if (!title || title->empty()) return text;
  return *title + " " + text;
}

void Corpus::Add(Document doc) {
  Require(!doc.doc_id.empty(), "document id is empty");
  Require(!doc.text.empty(), "document '" + doc.doc_id + "' has empty text");
  if (index_.contains(doc.doc_id))
    Fail(ErrorCode::kDuplicate, "duplicate doc_id '" + doc.doc_id + "'");
  index_.emplace(doc.doc_id, documents_.size());
  documents_.push_back(std::move(doc));
}

const Document* Corpus::Find(const std::string& doc_id) const {
  auto it = index_.find(doc_id);
  return it == index_.end() ? nullptr : &documents_[it->second];
}

const Document& Corpus::Get(const std::string& doc_id) const {
  const Document* doc = Find(doc_id);
  if (doc == nullptr) Fail(ErrorCode::kNotFound, "unknown doc_id '" + doc_id + "'");
  return *doc;
}

void Corpus::SetConnector(const std::string& doc_id, std::string text) {
  if (!index_.contains(doc_id))
    Fail(ErrorCode::kNotFound, "connector for unknown doc_id '" + doc_id + "'");
  d_connectors_[doc_id] = std::move(text);
}

Corpus LoadCorpus(const fs::path& path) {
  if (!fs::exists(path)) Fail(ErrorCode::kIo, "missing file " + path.string());
  Corpus corpus;
  ReadJsonLines(path, [&](const Json& r, std::size_t line) {
    Document doc{RequireString(r, "doc_id"), OptionalField(r, "title"),
                 RequireString(r, "text")};
    try {
      corpus.Add(std::move(doc));
    } catch (const Error& e) {
      Fail(e.code(), path.string() + ":" + std::to_string(line) + ": " +
                         e.what());
    }
  });
  return corpus;
}

void SaveCorpus(const fs::path& path, const Corpus& corpus) {
  std::vector<Json> records;
  for (const Document& d : corpus.documents()) {
    Json r = {{"doc_id", d.doc_id}};
    if (d.title) r["title"] = *d.title;
    r["text"] = d.text;
    records.push_back(std::move(r));
  }
  WriteJsonLines(path, records);
}

void LoadConnectors(const fs::path& path, Corpus& corpus) {
  ReadJsonLines(path, [&](const Json& r, std::size_t) {
    corpus.SetConnector(RequireString(r, "doc_id"),
                        RequireString(r, "d_connector"));
  });
}

void SaveConnectors(const fs::path& path,
                    const std::map<std::string, std::string>& connectors) {
  std::vector<Json> records;
  for (const auto& [id, text] : connectors)
    records.push_back({{"doc_id", id}, {"d_connector", text}});
  WriteJsonLines(path, records);
}

std::vector<QueryRecord> LoadQueries(const fs::path& path,
                                     const Corpus* corpus) {
  std::vector<QueryRecord> queries;
  std::set<std::string> seen;
  ReadJsonLines(path, [&](const Json& r, std::size_t) {
    QueryRecord q;
    q.query_id = RequireString(r, "query_id");
    q.query = RequireString(r, "query");
    q.answer = OptionalField(r, "answer");
    q.q_connector = OptionalField(r, "q_connector");
    if (auto it = r.find("relevant_doc_ids"); it != r.end() && !it->is_null()) {
      if (!it->is_array())
        Fail(ErrorCode::kParse, "'relevant_doc_ids' is not an array");
      for (const Json& id : *it) {
        if (!id.is_string())
          Fail(ErrorCode::kParse, "'relevant_doc_ids' holds a non-string");
        q.relevant_doc_ids.push_back(id.get<std::string>());
      }
    }
    if (!seen.insert(q.query_id).second)
      Fail(ErrorCode::kParse, "duplicate query_id '" + q.query_id + "'");
    if (corpus != nullptr)
      for (const std::string& id : q.relevant_doc_ids)
        if (corpus->Find(id) == nullptr)
          Fail(ErrorCode::kParse, "query '" + q.query_id +
                                      "' names unknown doc_id '" + id + "'");
    queries.push_back(std::move(q));
  });
  return queries;
}

void SaveQueries(const fs::path& path, const std::vector<QueryRecord>& queries) {
  std::vector<Json> records;
  for (const QueryRecord& q : queries) {
    Json r = {{"query_id", q.query_id}, {"query", q.query}};
    if (q.answer) r["answer"] = *q.answer;
    if (!q.relevant_doc_ids.empty()) r["relevant_doc_ids"] = q.relevant_doc_ids;
    if (q.q_connector) r["q_connector"] = *q.q_connector;
    records.push_back(std::move(r));
  }
  WriteJsonLines(path, records);
}

void WriteRun(const fs::path& path, const Run& run) {
  std::vector<Json> records;
  records.push_back({{"format", kRunFormat}, {"version", kRunVersion}});
  for (const RunEntry& e : run.entries) {
    Json ranking = Json::array();
    for (std::size_t i = 0; i < e.ranking.size(); ++i) {
      const RankedDoc& d = e.ranking[i];
      if (!std::isfinite(d.score))
        Fail(ErrorCode::kInvalidArgument,
             "query '" + e.query_id + "': non-finite score");
      if (i > 0 && d.score > e.ranking[i - 1].score)
        Fail(ErrorCode::kInvalidArgument,
             "query '" + e.query_id + "': ranking not sorted");
      ranking.push_back({{"doc_id", d.doc_id}, {"score", d.score}});
    }
    Json r = {{"query_id", e.query_id}, {"ranking", std::move(ranking)}};
    if (e.answer) r["answer"] = *e.answer;
    records.push_back(std::move(r));
  }
  WriteJsonLines(path, records);
}

Run ReadRun(const fs::path& path) {
  Run run;
  bool header = false;
  ReadJsonLines(path, [&](const Json& r, std::size_t) {
    if (!header) {
      if (OptionalString(r, "format") != kRunFormat)
        Fail(ErrorCode::kParse, "missing run file header");
      if (!r.contains("version") || r["version"] != kRunVersion)
        Fail(ErrorCode::kVersion, "unsupported run file version");
      header = true;
      return;
    }
    RunEntry e;
    e.query_id = RequireString(r, "query_id");
    e.answer = OptionalField(r, "answer");
    auto it = r.find("ranking");
    if (it == r.end() || !it->is_array())
      Fail(ErrorCode::kParse, "missing array field 'ranking'");
    for (const Json& d : *it) {
      if (!d.contains("score") || !d["score"].is_number())
        Fail(ErrorCode::kParse, "ranking entry without numeric score");
      e.ranking.push_back({RequireString(d, "doc_id"), d["score"].get<double>()});
    }
    run.entries.push_back(std::move(e));
  });
  if (!header) Fail(ErrorCode::kParse, path.string() + ": missing run file header");
  return run;
}

}  // namespace genret
