#pragma once

#include <stdexcept>
#include <string>

namespace skno {

/// Caller violated a precondition (bad shape, bad option, out-of-range count).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced or received non-finite values, or failed to converge.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Inverse transform of a spectrum expected to be real left an imaginary residue.
class SymmetryError : public NumericError {
 public:
  explicit SymmetryError(const std::string& what) : NumericError(what) {}
};

}  // namespace skno
