#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbmcert {

enum class ErrorKind {
  Dimension,
  Domain,
  Numeric,
  Data,
  Usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Data: return "data";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so the CLI can map it
// onto an exit code.
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

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Dimension, what);
}

}  // namespace gbmcert
