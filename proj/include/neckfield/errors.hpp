#pragma once

#include <stdexcept>
#include <string>

namespace neckfield {

// Bad user input: configs, parameter ranges, malformed files. CLI exit 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Algorithm failed on valid input: non-convergence, bracketing failure,
// degenerate data. CLI exit 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace neckfield
