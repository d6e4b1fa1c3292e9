#pragma once

#include <stdexcept>
#include <string>

namespace minsec {

// Coarse failure classes, mapped to process exit codes by the CLI:
// InvalidArgument/ParseError/Io -> 2, the rest -> 3.
enum class ErrorCode {
  InvalidArgument,
  ParseError,
  Io,
  NonManifold,
  InconsistentOrientation,
  Inconsistency,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

} // namespace minsec
