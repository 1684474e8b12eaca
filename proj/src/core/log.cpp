// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace fuzzkd {

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
  auto lg = std::make_shared<spdlog::logger>("fuzzkd", sink);
  lg->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char *env = std::getenv("FUZZKD_LOG")) {
    const auto parsed = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept it when asked for.
    if (parsed != spdlog::level::off || std::string(env) == "off")
      level = parsed;
  }
  lg->set_level(level);
  return lg;
}

} // namespace

spdlog::logger &logger() {
  static std::shared_ptr<spdlog::logger> instance = make_logger();
  return *instance;
}

} // namespace fuzzkd
