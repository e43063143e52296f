#pragma once

#include <stdexcept>
#include <string>

namespace dicke {

enum class ErrorKind {
  Domain,
  Cutoff,
  Normalization,
  Configuration,
  Unsupported,
  Labeling,
  Degeneracy,
  PhysicsGuard,
  Numeric,
  Bracket,
  NoResonance,
  FitRejected,
};

const char* to_string(ErrorKind kind);

// Process exit status for the command-line tool.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace dicke
