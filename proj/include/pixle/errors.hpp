#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pixle {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (mismatched lengths, out-of-bounds coordinates, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class InvalidPatch : public Error {
 public:
  using Error::Error;
};

class NoValidDestination : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PngError : public Error {
 public:
  using Error::Error;
};

/// Malformed or non-conforming message from an external oracle.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Raised when the oracle fails in the middle of an attack. Carries the number
/// of queries that completed before the failure.
class AttackAborted : public Error {
 public:
  AttackAborted(const std::string& what, std::size_t queries)
      : Error(what), queries_(queries) {}
  std::size_t queries() const noexcept { return queries_; }

 private:
  std::size_t queries_;
};

}  // namespace pixle
