#pragma once

#include <stdexcept>
#include <string>

namespace pyramidai {

/// Invalid configuration or parameters (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with input data or derived results (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A prediction source has no value for a queried tile.
class MissingPredictionError : public DataError {
 public:
  using DataError::DataError;
};

/// Two partial execution trees disagree on a shared node, or a merged tree
/// violates the execution-tree invariants.
class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

/// A metric is mathematically undefined for the given inputs.
class UndefinedMetricError : public DataError {
 public:
  using DataError::DataError;
};

/// No beta in the searched range meets the retention objective at a level.
class UnreachableObjectiveError : public DataError {
 public:
  UnreachableObjectiveError(const std::string& what, int level)
      : DataError(what), level_(level) {}
  int level() const noexcept { return level_; }

 private:
  int level_;
};

/// Socket or peer failure in the cluster runtime (CLI exit code 4).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pyramidai
