#pragma once

#include <stdexcept>
#include <string>

namespace laplab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state space, clique enumeration or subset enumeration exceeded its cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// An objective or gradient evaluated to NaN or infinity.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (graph, model, dataset, config or CSV files).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace laplab
