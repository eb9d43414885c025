#pragma once

#include <stdexcept>
#include <string>

namespace lplsp {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or length mismatch between related containers.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Violated precondition or type invariant.
class ContractError : public Error {
public:
  using Error::Error;
};

// Non-finite or otherwise unusable numeric parameter.
class ParameterError : public Error {
public:
  using Error::Error;
};

// Residual evaluation produced a non-finite value while probing a Jacobian
// column. column() is -1 when the base evaluation itself failed.
class EvaluationError : public Error {
public:
  EvaluationError(long column, const std::string& what)
      : Error(what), column_(column) {}
  long column() const { return column_; }

private:
  long column_;
};

// File-format rejection with a location the user can act on.
class ParseError : public Error {
public:
  ParseError(std::string path, long line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}
  const std::string& path() const { return path_; }
  long line() const { return line_; }

private:
  std::string path_;
  long line_;
};

// Metric undefined for the given data (e.g. every reference sample is 0 degC).
class MetricError : public Error {
public:
  using Error::Error;
};

// A fit produced a model that fails validation, or a stage of a staged fit
// failed. stage() is empty for single-stage fits.
class FitError : public Error {
public:
  explicit FitError(const std::string& what, std::string stage = {})
      : Error(stage.empty() ? what : stage + ": " + what),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

class IOError : public Error {
public:
  using Error::Error;
};

}  // namespace lplsp
