#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace geolift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Well-formed input for which the computation could not produce a result
// (no consensus, no visible surface, ...). The CLI maps this to exit code 2.
class ComputationError : public Error {
 public:
  using Error::Error;
};

// Non-fatal messages collected by operations that can recover from odd input.
struct Diagnostics {
  std::vector<std::string> messages;

  void warn(std::string msg) { messages.push_back(std::move(msg)); }
  bool empty() const { return messages.empty(); }
};

}  // namespace geolift
