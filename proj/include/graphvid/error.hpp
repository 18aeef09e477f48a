#pragma once

#include <stdexcept>
#include <string>

namespace graphvid {

enum class ErrorKind {
  InvalidArgument,  // precondition violated by the caller
  Format,           // malformed or truncated input data
  Io,               // filesystem failure
  Numeric,          // NaN/Inf during computation
  State,            // operation called in the wrong order
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace graphvid
