#pragma once

#include <stdexcept>
#include <string>

namespace hyperod {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  SingularMatrix,
  DegenerateFrame,
  NonConvergence,
  NegativeEigenvalue,
  RankDeficient,
  Diverged,
  SingularNormal,
  InsufficientData,
  CostGuard,
  Io,
};

[[nodiscard]] const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// command-line front end can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperod
