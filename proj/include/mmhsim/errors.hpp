// SPDX-License-Identifier: Apache-2.0

#ifndef MMHSIM_ERRORS_HPP
#define MMHSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mmhsim {

/// Invalid scenario or component configuration (bad density, spacing, ...).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operand shapes are incompatible (vector/matrix dimension mismatch).
class ShapeError : public std::invalid_argument {
public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A beam search was attempted against an empty path skeleton; the caller
/// should re-query the skeleton database or fall back to exhaustive search.
class BlockedSkeletonError : public std::runtime_error {
public:
  explicit BlockedSkeletonError(const std::string& what) : std::runtime_error(what) {}
};

/// No candidate satisfied the query-budget constraint during threshold search.
class InfeasibleThresholdError : public std::runtime_error {
public:
  explicit InfeasibleThresholdError(const std::string& what) : std::runtime_error(what) {}
};

/// Fixed-point iteration failed to reach the requested tolerance.
class NonConvergenceError : public std::runtime_error {
public:
  explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mmhsim

#endif  // MMHSIM_ERRORS_HPP
