#pragma once

#include <stdexcept>
#include <string>

namespace taskgraph {

enum class ErrorKind {
  format,     // unparseable or schema-violating input
  value,      // non-finite or otherwise invalid numeric value
  dimension,  // mismatched lengths / column counts
  range,      // id outside the vocabulary
  generation, // synthetic generator could not satisfy its constraints
  usage,      // bad arguments
};

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

}  // namespace taskgraph
