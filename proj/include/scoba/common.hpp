#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scoba {

using AgentId = std::int32_t;
using TaskId = std::int32_t;
using TimeStep = std::int32_t;

/// Thrown when an operation receives ids or structures that violate its
/// preconditions (unknown agent, missing window, invalid policy, ...).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a bounded computation exceeds its configured budget
/// (oracle enumeration, Q-table growth).
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown on malformed tree structures (broken sibling pairs etc.).
class StructureError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

}  // namespace scoba
