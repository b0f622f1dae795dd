#pragma once

#include <stdexcept>
#include <string>

namespace ambipose {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 6D rotation input was zero-length or had parallel blocks.
class RecoveryError : public Error {
 public:
  using Error::Error;
};

// Rotation mean matrix too rank-deficient to project onto SO(3).
class DegenerateMeanError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user-facing input (configs, bounds, counts, indices).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or failed iterative solve.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ambipose
