#pragma once

#include <stdexcept>
#include <string>

namespace imbf {

// Broad failure category; doubles as the CLI process exit code.
enum class ErrorKind : int {
  Config = 2,
  Data = 3,
  Runtime = 4,
};

// Fine-grained condition, so callers and tests can distinguish failures
// without parsing message text.
enum class ErrorCode {
  BadConfig,
  MissingFile,
  MalformedLine,
  EmptyFile,
  NotTwoClasses,
  InfeasibleRatio,
  StepTargetTooLarge,
  ZeroCountClass,
  LabelOutOfRange,
  NonFiniteValue,
  DimMismatch,
  EmptyTrainingSet,
  EmptyEvaluation,
  VersionMismatch,
  CorruptCheckpoint,
  MissingBaseline,
  UnknownClass,
  IoFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, ErrorCode code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(code) {}

  ErrorKind kind() const { return kind_; }
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  ErrorCode code_;
};

inline Error config_error(ErrorCode code, const std::string& what) {
  return Error(ErrorKind::Config, code, what);
}
inline Error data_error(ErrorCode code, const std::string& what) {
  return Error(ErrorKind::Data, code, what);
}
inline Error runtime_error(ErrorCode code, const std::string& what) {
  return Error(ErrorKind::Runtime, code, what);
}

}  // namespace imbf
