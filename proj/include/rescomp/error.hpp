#pragma once

#include <stdexcept>
#include <string>

namespace rescomp {

enum class ErrorKind {
  kPrecondition,   // caller violated an operation contract
  kConfig,         // malformed or inconsistent run configuration
  kInfeasible,     // e.g. no doubly-stochastic scaling, no perfect matching
  kNumerical,      // singular / ill-conditioned system
  kGeneration,     // random generator exhausted its retry budget
  kUnsupported,    // valid input the operation does not handle (e.g. |M| != 1)
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kPrecondition, what);
}

}  // namespace rescomp
