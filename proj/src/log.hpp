// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace genret {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3 };

inline std::atomic<int>& LogThreshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::kInfo)};
  return level;
}

inline void SetLogLevel(LogLevel level) {
  LogThreshold() = static_cast<int>(level);
}

inline void Log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) < LogThreshold()) return;
  static std::mutex mu;
  static constexpr std::string_view kNames[] = {"debug", "info", "warning",
                                                "error"};
  std::lock_guard lock(mu);
  std::cerr << "[genret " << kNames[static_cast<int>(level)] << "] " << message
            << '\n';
}

}  // namespace genret
