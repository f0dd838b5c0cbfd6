#pragma once
#include <stdexcept>
#include <string>

namespace mhess {

// bad input / configuration (CLI exit code 2)
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& w) : std::runtime_error(w) {}
};

// a numerical procedure failed to meet its contract (CLI exit code 1)
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& w) : std::runtime_error(w) {}
};

}  // namespace mhess
