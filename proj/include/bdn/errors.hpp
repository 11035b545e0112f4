#pragma once

#include <stdexcept>
#include <string>

namespace bdn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the operation's domain (u outside [0,1], n = 0, k not in {1,2}).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Unknown parameter, question, answer, node or session.
class LookupError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "lookup"; }
};

/// Malformed distribution literal, role/dimension mismatch, bad model-file field.
class SchemaError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "schema"; }
};

/// Illegal consultation transition (re-answering, undo on an empty history).
class StateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "state"; }
};

/// Model text is not well-formed JSON.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  const char* kind() const noexcept override { return "parse"; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Undefined z-score (generic distribution has zero variance).
class UndefinedDivergence : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined-divergence"; }
};

/// Decision tree too large for exhaustive rollback.
class EvaluationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "evaluation"; }
};

}  // namespace bdn
