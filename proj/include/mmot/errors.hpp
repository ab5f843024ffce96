#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mmot {

/// Malformed or inconsistent input (dimension mismatch, out-of-range index, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (singular system, step underflow, pivot limit).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::vector<std::string> trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<std::string>& trace() const { return trace_; }

 private:
  std::vector<std::string> trace_;
};

/// The requested operation is not defined for this kind of input.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mmot
