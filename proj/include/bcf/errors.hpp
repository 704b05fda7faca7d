#pragma once

#include <stdexcept>
#include <string>

namespace bcf {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries, labels outside a category set, malformed files.
class invalid_input_error : public error {
 public:
  using error::error;
};

/// Shape mismatch or an out-of-range rank/count argument.
class dimension_error : public error {
 public:
  using error::error;
};

/// The exogenous design ZᵀZ is singular (or n < r).
class rank_deficient_design_error : public error {
 public:
  using error::error;
};

class numerical_error : public error {
 public:
  using error::error;
};

class unsupported_oracle_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  using error::error;
};

}  // namespace bcf
