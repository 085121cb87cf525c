#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cardcorr {

// Base for every error the toolkit raises on bad input or misuse.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedPlan : public Error {
 public:
  MalformedPlan(const std::string& message, std::size_t line, const std::string& file = "")
      : Error((file.empty() ? "" : file + ": ") + "line " + std::to_string(line) + ": " + message),
        message_(message),
        line_(line) {}

  const std::string& message() const { return message_; }
  std::size_t line() const { return line_; }

 private:
  std::string message_;
  std::size_t line_;
};

class NumberParse : public Error {
 public:
  NumberParse(const std::string& message, std::size_t line, const std::string& file = "")
      : Error((file.empty() ? "" : file + ": ") + "line " + std::to_string(line) + ": " + message),
        message_(message),
        line_(line) {}

  const std::string& message() const { return message_; }
  std::size_t line() const { return line_; }

 private:
  std::string message_;
  std::size_t line_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string execution_id, std::string field, const std::string& message)
      : Error("execution '" + execution_id + "', field '" + field + "': " + message),
        execution_id_(std::move(execution_id)),
        field_(std::move(field)) {}

  const std::string& execution_id() const { return execution_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string execution_id_;
  std::string field_;
};

class TooFewExecutions : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class KExceedsReference : public Error {
 public:
  using Error::Error;
};

// Raised for empty training/validation/metric inputs.
class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MissingPrediction : public Error {
 public:
  explicit MissingPrediction(std::string node_id)
      : Error("missing prediction for node '" + node_id + "'"), node_id_(std::move(node_id)) {}

  const std::string& node_id() const { return node_id_; }

 private:
  std::string node_id_;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cardcorr
