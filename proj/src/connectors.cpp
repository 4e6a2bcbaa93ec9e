// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "connectors.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "error.hpp"
#include "jsonl.hpp"
#include "text.hpp"

namespace genret {

namespace {

std::string JoinWords(const std::vector<std::string>& words, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < limit; ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> ContentWords(const std::string& sentence) {
  std::vector<std::string> out;
  for (std::string& w : NormalizeWords(sentence))
    if (!IsStopword(w)) out.push_back(std::move(w));
  return out;
}

std::uint64_t HashString(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string StubPseudoQuery(const Document& doc, std::uint64_t seed, int index) {
  std::vector<std::vector<std::string>> candidates;
  for (const std::string& s : SplitSentences(doc.text)) {
    std::vector<std::string> words = ContentWords(s);
    if (!words.empty()) candidates.push_back(std::move(words));
  }
  if (candidates.empty()) return NormalizeText(doc.text);
  std::seed_seq seq{seed, HashString(doc.doc_id), static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  const auto& words = candidates[rng() % candidates.size()];
  const std::size_t lo = std::min<std::size_t>(3, words.size());
  const std::size_t hi = std::min<std::size_t>(8, words.size());
  const std::size_t len = lo + rng() % (hi - lo + 1);
  const std::size_t start = rng() % (words.size() - len + 1);
  return JoinWords({words.begin() + static_cast<std::ptrdiff_t>(start), words.end()}, len);
}

std::string StubPseudoAnswer(const Document& doc, const std::string& query) {
  const std::vector<std::string> wanted = NormalizeWords(query);
  const std::vector<std::string> sentences = SplitSentences(doc.text);
  for (const std::string& s : sentences) {
    const std::vector<std::string> words = NormalizeWords(s);
    const std::set<std::string> have(words.begin(), words.end());
    if (std::all_of(wanted.begin(), wanted.end(),
                    [&](const std::string& w) { return have.contains(w); }))
      return s;
  }
  return sentences.empty() ? doc.text : sentences.front();
}

}  // namespace

const char* PromptKindName(PromptKind kind) {
  switch (kind) {
    case PromptKind::kDConnector: return "d_connector";
    case PromptKind::kQConnector: return "q_connector";
    case PromptKind::kIterQConnector: return "iter_q_connector";
    case PromptKind::kPseudoQuery: return "pseudo_query";
    case PromptKind::kPseudoAnswer: return "pseudo_answer";
  }
  return "?";
}

PromptTemplate::PromptTemplate(PromptKind kind, std::string text,
                               std::vector<std::string> placeholders)
    : kind_(kind), text_(std::move(text)), placeholders_(std::move(placeholders)) {}

const PromptTemplate& PromptTemplate::For(PromptKind kind) {
  static const PromptTemplate kD(
      PromptKind::kDConnector,
      "Summarize the key information of the following document in about {m} "
      "words.\nDocument:{d}",
      {"m", "d"});
  static const PromptTemplate kQ(
      PromptKind::kQConnector,
      "Write a context to the following question in about {n} words.\n"
      "Question:{q}",
      {"n", "q"});
  static const PromptTemplate kIter(
      PromptKind::kIterQConnector,
      "Given the following potentially relevant documents and the potentially "
      "correct answer, please provide the context for the question in {n} "
      "words. \nDocument:{d} \nAnswer:{a} \nQuestion:{q}",
      {"n", "d", "a", "q"});
  static const PromptTemplate kPseudoQ(
      PromptKind::kPseudoQuery,
      "Write one short search query that the following document answers.\n"
      "Document:{d}",
      {"d"});
  static const PromptTemplate kPseudoA(
      PromptKind::kPseudoAnswer,
      "Answer the query using only the following document. Reply with the "
      "answer sentence only.\nDocument:{d}\nQuery:{q}",
      {"d", "q"});
  switch (kind) {
    case PromptKind::kDConnector: return kD;
    case PromptKind::kQConnector: return kQ;
    case PromptKind::kIterQConnector: return kIter;
    case PromptKind::kPseudoQuery: return kPseudoQ;
    case PromptKind::kPseudoAnswer: return kPseudoA;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown prompt kind");
}

std::string PromptTemplate::Render(
    const std::map<std::string, std::string>& bindings) const {
  for (const std::string& p : placeholders_)
    if (!bindings.contains(p))
      Fail(ErrorCode::kInvalidArgument, std::string(PromptKindName(kind_)) +
                                            " prompt: missing binding {" + p + "}");
  std::string out;
  std::size_t i = 0;
  while (i < text_.size()) {
    const std::size_t open = text_.find('{', i);
    if (open == std::string::npos) {
      out.append(text_, i, std::string::npos);
      break;
    }
    const std::size_t close = text_.find('}', open);
    out.append(text_, i, open - i);
    out += bindings.at(text_.substr(open + 1, close - open - 1));
    i = close + 1;
  }
  return out;
}

std::vector<std::string> SplitSentences(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    current += text[i];
    const bool terminal = text[i] == '.' || text[i] == '!' || text[i] == '?';
    if (terminal && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      std::string s = Trim(current);
      if (!s.empty()) out.push_back(std::move(s));
      current.clear();
    }
  }
  std::string s = Trim(current);
  if (!s.empty()) out.push_back(std::move(s));
  return out;
}

std::string FirstParagraph(const std::string& text) {
  std::string t = Trim(text);
  std::size_t pos = 0;
  while ((pos = t.find('\n', pos)) != std::string::npos) {
    std::size_t next = pos + 1;
    while (next < t.size() && (t[next] == ' ' || t[next] == '\t' || t[next] == '\r'))
      ++next;
    if (next < t.size() && t[next] == '\n') return Trim(t.substr(0, pos));
    pos = next;
  }
  return t;
}

std::string StubBackend::Generate(const GenRequest& r) {
  switch (r.kind) {
    case PromptKind::kDConnector: {
      Require(r.doc != nullptr, "d_connector request without document");
      return JoinWords(NormalizeWords(r.doc->FullText()),
                       static_cast<std::size_t>(std::max(r.length, 1)));
    }
    case PromptKind::kQConnector: {
      std::string out = r.query;
      const std::vector<std::string> terms = ContentWords(r.query);
      if (!terms.empty()) out += " context " + JoinWords(terms, terms.size());
      return out;
    }
    case PromptKind::kIterQConnector: {
      std::string out = r.query;
      for (const Document* d : r.documents) {
        const std::vector<std::string> s = SplitSentences(d->text);
        if (!s.empty()) out += " " + s.front();
      }
      if (!r.answer.empty()) out += " " + r.answer;
      return out;
    }
    case PromptKind::kPseudoQuery:
      Require(r.doc != nullptr, "pseudo_query request without document");
      return StubPseudoQuery(*r.doc, r.seed, r.index);
    case PromptKind::kPseudoAnswer:
      Require(r.doc != nullptr, "pseudo_answer request without document");
      return StubPseudoAnswer(*r.doc, r.query);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown prompt kind");
}

GoldInjectingStub::GoldInjectingStub(std::map<std::string, std::string> gold_text)
    : gold_text_(std::move(gold_text)) {}

std::string GoldInjectingStub::Generate(const GenRequest& r) {
  std::string out = base_.Generate(r);
  if (r.kind != PromptKind::kIterQConnector) return out;
  auto it = gold_text_.find(r.query);
  if (it != gold_text_.end()) out += " " + it->second;
  return out;
}

std::string GenDConnector(const Document& doc, int m, GenBackend& backend,
                          int max_prompt_words) {
  Require(!doc.text.empty(), "document '" + doc.doc_id + "' has empty text");
  Require(m >= 1, "connector.m must be >= 1");
  std::string body = doc.FullText();
  if (max_prompt_words > 0) {
    std::istringstream in(body);
    std::string w, cut;
    for (int i = 0; i < max_prompt_words && in >> w; ++i)
      cut += (i ? " " : "") + w;
    body = cut;
  }
  GenRequest r;
  r.kind = PromptKind::kDConnector;
  r.prompt = PromptTemplate::For(r.kind).Render({{"m", std::to_string(m)}, {"d", body}});
  r.doc = &doc;
  r.length = m;
  std::string out;
  try {
    out = Trim(backend.Generate(r));
  } catch (const Error& e) {
    Fail(e.code(), "d_connector for '" + doc.doc_id + "': " + e.what());
  }
  if (out.empty())
    Fail(ErrorCode::kBackendProtocol, "empty d_connector for '" + doc.doc_id + "'");
  return out;
}

std::string GenQConnector(const std::string& query, int n, GenBackend& backend) {
  Require(!Trim(query).empty(), "empty query");
  Require(n >= 1, "connector.n must be >= 1");
  GenRequest r;
  r.kind = PromptKind::kQConnector;
  r.prompt = PromptTemplate::For(r.kind).Render({{"n", std::to_string(n)}, {"q", query}});
  r.query = query;
  r.length = n;
  std::string out = Trim(backend.Generate(r));
  if (out.empty()) Fail(ErrorCode::kBackendProtocol, "empty q_connector");
  return out;
}

std::string GenIterQConnector(const std::string& query,
                              const std::vector<const Document*>& topk_docs,
                              const std::string& prev_answer,
                              const IterPromptOptions& options,
                              GenBackend& backend) {
  Require(options.k_docs >= 1, "iter.k_docs must be >= 1");
  Require(!topk_docs.empty(), "iteration prompt needs at least one document");
  std::vector<const Document*> docs(
      topk_docs.begin(),
      topk_docs.begin() + std::min<std::ptrdiff_t>(options.k_docs,
                                                   static_cast<std::ptrdiff_t>(topk_docs.size())));
  std::string joined;
  for (const Document* d : docs) {
    std::istringstream in(d->FullText());
    std::string w, cut;
    for (int i = 0; (options.max_doc_words <= 0 || i < options.max_doc_words) && in >> w; ++i)
      cut += (i ? " " : "") + w;
    if (!joined.empty()) joined += "\n";
    joined += cut;
  }
  GenRequest r;
  r.kind = PromptKind::kIterQConnector;
  r.prompt = PromptTemplate::For(r.kind).Render(
      {{"n", std::to_string(options.n)}, {"d", joined}, {"a", prev_answer}, {"q", query}});
  r.query = query;
  r.answer = prev_answer;
  r.documents = std::move(docs);
  r.length = options.n;
  std::string out = Trim(backend.Generate(r));
  if (out.empty()) Fail(ErrorCode::kBackendProtocol, "empty iteration q_connector");
  return out;
}

bool ResponseCache::Lookup(const std::string& model, const std::string& prompt,
                           std::string* response) const {
  const auto path = PathFor(model, prompt);
  if (!std::filesystem::exists(path)) return false;
  try {
    const Json j = Json::parse(ReadFile(path));
    if (j.value("model", "") != model || j.value("prompt_sha", "") != Sha256Hex(prompt))
      return false;
    *response = j.at("response").get<std::string>();
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void ResponseCache::Store(const std::string& model, const std::string& prompt,
                          const std::string& response) const {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const Json j = {{"prompt_sha", Sha256Hex(prompt)},
                  {"model", model},
                  {"response", response},
                  {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
  WriteFileAtomic(PathFor(model, prompt), j.dump() + "\n");
}

std::filesystem::path ResponseCache::PathFor(const std::string& model,
                                             const std::string& prompt) const {
  return dir_ / (Sha256Hex(model + '\0' + prompt) + ".json");
}

}  // namespace genret
