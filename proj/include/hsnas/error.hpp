#pragma once

#include <stdexcept>
#include <string>

namespace hsnas {

// Every failure surfaced by the library derives from Error. The kind maps
// directly onto the CLI exit codes.
enum class ErrorKind {
  Config,        // bad configuration or usage
  Input,         // malformed or insufficient input data
  Format,        // unreadable model/dataset file
  Parse,         // unparseable LLM reply
  Precondition,  // caller violated an operation precondition
  State,         // object used before it is ready
  Infeasible,    // constraint cannot be satisfied
  Transport,     // network failure after retries
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::Precondition, what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorKind::State, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error(ErrorKind::Infeasible, what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what)
      : Error(ErrorKind::Transport, what) {}
};

// Carries the raw reply so callers can log what the model actually said.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw_reply)
      : Error(ErrorKind::Parse, what), raw_reply_(std::move(raw_reply)) {}

  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

}  // namespace hsnas
