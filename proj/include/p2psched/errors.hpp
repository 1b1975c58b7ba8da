#pragma once

#include <stdexcept>
#include <string>

namespace p2psched {

// Bad user-supplied configuration. The CLI maps this to exit status 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violated internal invariant (infeasible schedule, broken queue bound).
// Indicates a bug in this code, never a bad input. CLI exit status 2.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace p2psched
