#ifndef DYNRW_ERROR_HPP
#define DYNRW_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dynrw {

enum class ErrorCode {
  InvalidArgument,
  Domain,
  WindowOverflow,
  ContractViolation,
  Io,
  Budget,
  CellFailed,
};

// All library failures are reported through this exception; the C API maps
// the code onto its status enum.
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

inline void require(bool cond, const std::string& what) {
  if (!cond)
    fail(ErrorCode::InvalidArgument, what);
}

}  // namespace dynrw

#endif
