#pragma once

#include <stdexcept>
#include <string>

namespace icq {

// Two failure classes cross the library boundary:
//   validation - the caller handed us inconsistent parameters or data
//   numerical  - a well-posed computation failed to converge / lost accuracy
// The C API maps them to distinct status codes, the CLI to exit codes 2 / 3.
enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(ErrorKind::validation, msg);
}

[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorKind::numerical, msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw_validation(msg);
}

// Literal-message overload: no std::string is built unless the check fails,
// which keeps require() free to call in per-sample hot paths.
inline void require(bool cond, const char* msg) {
  if (!cond) throw_validation(std::string(msg));
}

} // namespace icq
