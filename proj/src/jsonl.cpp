// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "jsonl.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "error.hpp"

namespace genret {

namespace fs = std::filesystem;

void ReadJsonLines(const fs::path& path,
                   const std::function<void(const Json&, std::size_t)>& visit) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      visit(Json::parse(line), line_number);
    } catch (const Json::exception& e) {
      Fail(ErrorCode::kParse, path.string() + ":" +
                                  std::to_string(line_number) + ": " +
                                  e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParse) throw;
      Fail(ErrorCode::kParse, path.string() + ":" +
                                  std::to_string(line_number) + ": " +
                                  e.what());
    }
  }
}

void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) Fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    Fail(ErrorCode::kIo, "cannot rename into " + path.string() + ": " +
                             ec.message());
  }
}

void WriteJsonLines(const fs::path& path, const std::vector<Json>& records) {
  std::string out;
  for (const Json& r : records) {
    out += r.dump();
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string RequireString(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string())
    Fail(ErrorCode::kParse, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::string OptionalString(const Json& record, const char* key,
                           std::string fallback) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return fallback;
  if (!it->is_string())
    Fail(ErrorCode::kParse, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::string Sha256Hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1)
    Fail(ErrorCode::kState, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace genret
