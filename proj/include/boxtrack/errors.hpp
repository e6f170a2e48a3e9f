#pragma once

#include <stdexcept>
#include <string>

namespace boxtrack {

/// Root of every error the toolkit throws. `exit_code()` maps onto the CLI
/// contract: 1 validation failure, 2 configuration error, 3 transport error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// An operation was applied to a state in which it is not valid.
class PreconditionViolation : public Error {
 public:
  PreconditionViolation(const std::string& what, std::string op, int box, int step = -1)
      : Error(what), op_(std::move(op)), box_(box), step_(step) {}

  const std::string& op() const noexcept { return op_; }
  int box() const noexcept { return box_; }
  /// Index of the failing step during replay, -1 when not replaying.
  int step() const noexcept { return step_; }

 private:
  std::string op_;
  int box_;
  int step_;
};

class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class ProtocolError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace boxtrack
