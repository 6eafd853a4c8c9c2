#pragma once

#include <spdlog/spdlog.h>

namespace amt {

// Shared logger for the library. Verbosity comes from the AMT_LOG environment
// variable (trace, debug, info, warn, error, off); defaults to warn.
spdlog::logger& logger();

}  // namespace amt
