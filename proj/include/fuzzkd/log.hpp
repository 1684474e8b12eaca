// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace fuzzkd {

/// Library-wide logger writing to stderr. Level comes from the FUZZKD_LOG
/// environment variable (trace, debug, info, warn, error, off); default warn.
spdlog::logger &logger();

} // namespace fuzzkd
