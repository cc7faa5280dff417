#pragma once

#include <stdexcept>
#include <string>

namespace evdro {

/// Error with enough context to locate the offending input.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evdro
