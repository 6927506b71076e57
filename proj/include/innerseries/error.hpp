#pragma once

#include <stdexcept>
#include <string>

namespace innerseries {

// Numeric values are part of the C ABI (see innerseries.h); keep them in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kDomain = 3,
  kIo = 4,
  kFormat = 5,
  kNumerical = 6,
  kEmpty = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace innerseries
