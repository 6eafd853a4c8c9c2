#pragma once

#include <stdexcept>
#include <string>

namespace amt {

enum class ErrorCode {
  InvalidArgument,
  UnreadableFile,
  UnsupportedEncoding,
  EmptyAudio,
  InvalidConfig,
  AllSilent,
  DimensionMismatch,
  EmptyTraining,
  MalformedFile,
  IoFailure,
  OutOfRange,
  EmptyLibrary,
  SplitLeakage,
  BankMismatch,
  MissingPair,
  ModelStateMismatch,
  Internal,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C layer can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace amt
