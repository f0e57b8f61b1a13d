// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hegmm {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible (matrix dims, segment lengths, mask lengths).
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A working set does not fit the configured slot budget.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// Exact integer arithmetic would overflow; never wraps silently.
class OverflowError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file or config.
class ParseError : public Error {
  public:
    using Error::Error;
};

}  // namespace hegmm
