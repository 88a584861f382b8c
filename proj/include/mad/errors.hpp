#pragma once

#include <stdexcept>
#include <string>

namespace mad {

// Invalid configuration or precondition violation (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/parameter shape disagreement.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value produced by an operation (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Required file or checkpoint is missing (CLI exit code 4).
struct MissingArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CkptError { kBadFormat, kVersionMismatch, kTruncated, kShapeMismatch };

struct CheckpointError : std::runtime_error {
  CkptError code;
  CheckpointError(CkptError c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

}  // namespace mad
