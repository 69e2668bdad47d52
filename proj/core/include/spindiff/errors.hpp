#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spindiff {

/// Failure categories. The CLI maps Config to exit code 1, Io to 3 and
/// everything else to 2 (numerical failure).
enum class ErrorKind {
  Domain,
  ResourceLimit,
  EmptyProfile,
  BoxTooSmall,
  DegenerateAbundance,
  Normalization,
  InconsistentAsymptote,
  NonConvergence,
  Numerical,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

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

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace spindiff
