// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace genret {

using Json = nlohmann::json;

// Calls `visit(record, line_number)` for every non-blank line. Parse failures
// and exceptions thrown by `visit` are rethrown as kParse errors carrying the
// file name and 1-based line number.
void ReadJsonLines(const std::filesystem::path& path,
                   const std::function<void(const Json&, std::size_t)>& visit);

// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& contents);

void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<Json>& records);

std::string ReadFile(const std::filesystem::path& path);

// Field accessors that fail with a descriptive kParse error.
std::string RequireString(const Json& record, const char* key);
std::string OptionalString(const Json& record, const char* key,
                           std::string fallback = {});

// Lowercase hex SHA-256.
std::string Sha256Hex(const std::string& data);

}  // namespace genret
