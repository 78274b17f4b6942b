#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selectest {

enum class ErrorKind {
  Config,      // invalid parameters or configuration
  Data,        // malformed or inconsistent input data
  Infeasible,  // statistically infeasible: thin set, empty sample, ...
};

/// Base error. Every error carries the pipeline stage that raised it, and
/// `what()` renders as "[stage] message".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string message_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string stage, const std::string& message)
      : Error(ErrorKind::Config, std::move(stage), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string stage, const std::string& message)
      : Error(ErrorKind::Data, std::move(stage), message) {}
};

/// Raised when too few observations support a computation. `count` is the
/// number of usable observations that were found.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string stage, const std::string& message, std::size_t count = 0)
      : Error(ErrorKind::Infeasible, std::move(stage), message), count_(count) {}

  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

/// Re-throws `e` with `stage` prepended to its stage path ("run_test1/residuals").
[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage);

/// CLI exit code for an error kind: 1 for data/config problems, 2 for
/// statistical infeasibility.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace selectest
