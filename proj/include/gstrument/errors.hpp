#pragma once

#include <stdexcept>
#include <string>

namespace gstrument {

// Error kinds surfaced by the library. All derive from std::exception so a
// caller can catch broadly; the CLI maps them to a nonzero exit status.

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotFound : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularOperator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Throws InvalidArgument with `what` when `cond` is false.
inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace gstrument
