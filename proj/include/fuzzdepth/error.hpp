#pragma once

#include <stdexcept>
#include <string>

namespace fuzzdepth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter violates its documented range or contract
/// (bad threshold, invalid generator config, out-of-range percentile, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is unusable: values outside [0,1], mismatched grids,
/// degenerate ensembles, duplicate member IDs.
class DataError : public Error {
 public:
  using Error::Error;
};

/// File access or container format problem.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fuzzdepth
