#pragma once

#include <stdexcept>
#include <string>

namespace vstitch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear system or geometric configuration has no unique solution.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class EstimationFailed : public Error {
 public:
  using Error::Error;
};

/// The coarse alignment left less than the required fraction of shared pixels.
class InsufficientOverlap : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

}  // namespace vstitch
