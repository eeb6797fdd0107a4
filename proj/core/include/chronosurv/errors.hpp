#pragma once

#include <stdexcept>
#include <string>

namespace chronosurv {

// Base for all library errors. Callers that only need a coarse outcome can
// catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (unknown key, value out of range, n too small).
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid data passed to an operation (shape mismatch, empty grid).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A numeric input that must be finite was not.
class NonFiniteInputError : public Error {
 public:
  using Error::Error;
};

// Stratified fold split cannot satisfy its balance invariant.
class StratificationError : public Error {
 public:
  using Error::Error;
};

// A statistic whose defining quantity is empty (zero events, zero comparable pairs).
class UndefinedStatError : public Error {
 public:
  using Error::Error;
};

// k-means asked to split fewer distinct values than clusters.
class DegenerateClusterError : public Error {
 public:
  using Error::Error;
};

// An API pairing rule was broken (e.g. backward() fed a cache from a
// differently shaped forward()).
class ContractViolationError : public Error {
 public:
  using Error::Error;
};

// Training hit a non-finite gradient; the epoch cannot continue.
class AbortEpochError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure; message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace chronosurv
