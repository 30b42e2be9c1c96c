#pragma once

#include <stdexcept>
#include <string>

namespace soc {

// Shape/dimension violations: carries both offending shapes in the message.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or unknown configuration keys/values. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated operation precondition (non-scalar loss, NaN cost matrix, ...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace soc
