#pragma once

#include <stdexcept>
#include <string>

namespace simulst {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive oracles refuse inputs that would explode combinatorially.
class SizeError : public Error {
 public:
  using Error::Error;
};

class InvalidTraceError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t sample_index)
      : Error(what), sample_index_(sample_index) {}
  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure (connect, disconnect, timeout).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace simulst
