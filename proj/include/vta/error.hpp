#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vta {

/// Base class of every error raised by the toolchain.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON or a violation of the IR grammar. `where()` is a JSON path
/// (`$.LOAD.ACC[1]`) or a byte offset for lexical errors.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Well-formed IR that is not meaningful (unknown names, wrong targets, ...).
class SemanticError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyMatrixError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

/// A matrix the reference evaluator needs was not supplied.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Internal planner/codegen disagreement. Reaching this is a bug.
class SlotOverflowError : public Error {
 public:
  using Error::Error;
};

/// Raised by the simulator; carries the index of the failing instruction.
class ExecutionError : public Error {
 public:
  ExecutionError(std::size_t index, const std::string& what)
      : Error("instruction " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A failure inside one layer of a network run.
class LayerError : public Error {
 public:
  LayerError(int layer, const std::string& what)
      : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

}  // namespace vta
