#pragma once

#include <stdexcept>
#include <string>

namespace curveflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad grid, schema violation, mismatched windings.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A support or radius profile whose radius of curvature is not strictly positive.
class NotLocallyConvexError : public ValidationError {
public:
  NotLocallyConvexError(const std::string& what, double min_radius)
      : ValidationError(what), min_radius_(min_radius) {}
  double min_radius() const noexcept { return min_radius_; }

private:
  double min_radius_;
};

/// Radius profile that does not describe a closed curve.
class ClosureError : public Error {
public:
  ClosureError(const std::string& what, double defect)
      : Error(what), defect_(defect) {}
  double defect() const noexcept { return defect_; }

private:
  double defect_;
};

class InvalidPolylineError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class GridMismatchError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Root bracket for the limit constant has no sign change.
class NoRootError : public Error {
public:
  using Error::Error;
};

}  // namespace curveflow
