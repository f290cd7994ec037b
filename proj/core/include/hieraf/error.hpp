#ifndef HIERAF_ERROR_HPP_
#define HIERAF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hieraf {

// Argument outside its declared domain (exposure index, lens action, region).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Environment method called in the wrong episode phase.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Caller violated a documented contract (dimension mismatch, empty buffer).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Fitting a model from data failed (corpus too small, singular covariance).
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistical estimator received samples it cannot fit.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimization produced a non-finite loss or parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File parsing or persistence failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint container is corrupt, truncated or has the wrong magic/version.
class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

// Run configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hieraf

#endif  // HIERAF_ERROR_HPP_
