#pragma once

#include <stdexcept>
#include <string>

namespace cmsm {

/// Array shapes that do not agree (image vs. maps, k-space vs. mask, ...).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Grid dimension the FFT cannot handle (non power of two).
struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss, divergence, or another numerical breakdown.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Base for malformed or unreadable data files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadMagicError : DataError {
  using DataError::DataError;
};

struct VersionError : DataError {
  using DataError::DataError;
};

struct TruncatedError : DataError {
  using DataError::DataError;
};

/// Backward pass requested for a computation that was never recorded.
struct TapeError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace cmsm
