#pragma once

#include <stdexcept>
#include <string>

namespace ordinal {

/// Raised on contract violations: bad shapes, unknown classes, invalid configs.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ordinal
