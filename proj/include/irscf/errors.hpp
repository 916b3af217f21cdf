// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irscf {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Near-singular Gram matrix in the pseudo-inverse.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalization applied to an all-zero input.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A method whose preconditions cannot hold for the configuration (local ZF with M < K).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t node)
      : std::runtime_error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  explicit NumericError(const std::string& what)
      : std::runtime_error(what), node_(static_cast<std::size_t>(-1)) {}

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

}  // namespace irscf
