#include "amt/error.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <mutex>

#include "amt/log.hpp"

namespace amt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::AllSilent: return "AllSilent";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyTraining: return "EmptyTraining";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::SplitLeakage: return "SplitLeakage";
    case ErrorCode::BankMismatch: return "BankMismatch";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::ModelStateMismatch: return "ModelStateMismatch";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

spdlog::logger& logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("amt");
    instance->set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("AMT_LOG")) {
      level = spdlog::level::from_str(env);
    }
    instance->set_level(level);
  });
  return *instance;
}

}  // namespace amt
