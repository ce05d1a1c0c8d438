#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vitreg {

enum class ErrorKind {
  kConfig,        // invalid architecture / training configuration
  kArgument,      // bad argument to an operation
  kShape,         // tensor dimension mismatch
  kCheckpoint,    // unreadable or mismatched checkpoint
  kIngest,        // manifest or image ingestion failure
  kAugmentation,  // augmentation precondition violated
  kTraining,      // training aborted (e.g. non-finite loss)
  kEvaluation,    // metric undefined for the given inputs
  kIo,            // filesystem failure
};

// Module that owns an error kind, used for the "module.kind" diagnostic prefix.
std::string_view error_module(ErrorKind kind);
std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // "<module>.<kind>: <message>"
  std::string diagnostic() const;

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace vitreg
