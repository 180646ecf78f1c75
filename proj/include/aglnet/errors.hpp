#pragma once

// Error taxonomy. Everything user-triggerable derives from Error so the CLI
// can map it to a machine-readable report; ContractViolation marks internal
// precondition breaches (programming errors, not user input).

#include <stdexcept>
#include <string>

namespace aglnet {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Bad or inconsistent user-supplied configuration.
class InvalidConfigError : public Error {
 public:
  explicit InvalidConfigError(const std::string& what)
      : Error("invalid_config", what) {}
};

// Data that cannot be standardized or otherwise used (e.g. constant column).
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error("degenerate_data", what) {}
};

// An iterative fit produced a non-finite loss and retries were exhausted.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long at_iteration)
      : Error("divergence", what), iteration_(at_iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

// Every candidate in a model-selection sweep failed.
class SweepError : public Error {
 public:
  explicit SweepError(const std::string& what) : Error("sweep_failed", what) {}
};

// A metric is undefined for the given inputs (e.g. empty truth set).
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error("undefined_metric", what) {}
};

// File / parse problems for models, datasets, configs.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

// Resource limits (e.g. dictionary memory budget exceeded).
class ResourceLimitError : public Error {
 public:
  explicit ResourceLimitError(const std::string& what)
      : Error("resource_limit", what) {}
};

// Internal invariant breach; indicates a bug, not bad input.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::logic_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace aglnet
