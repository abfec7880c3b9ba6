#pragma once

#include <stdexcept>
#include <string>

namespace rmood {

// Every library failure derives from Error so callers can catch one type; the
// subclasses exist so the CLI can map failures onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

// Raised when a training episode carries an anomaly onset.
class ContaminationError : public DataError {
 public:
  using DataError::DataError;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class VersionError : public LoadError {
 public:
  using LoadError::LoadError;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// An output already exists and overwriting was not requested.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmood
