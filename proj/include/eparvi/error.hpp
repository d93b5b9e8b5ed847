#pragma once

#include "eparvi/types.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace eparvi {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidDimensionError : public Error {
public:
  using Error::Error;
};

/// Two charges occupy the same location.
class SingularityError : public Error {
public:
  using Error::Error;
};

class ForceAssemblyError : public Error {
public:
  ForceAssemblyError(Index particle, const std::string &what)
      : Error("force assembly failed at particle " + std::to_string(particle) +
              ": " + what),
        particle_(particle) {}

  Index particle() const { return particle_; }

private:
  Index particle_;
};

class IntegratorError : public Error {
public:
  using Error::Error;
};

class MeshError : public Error {
public:
  using Error::Error;
};

/// A charge magnitude came out negative or non-finite.
class PositivityError : public MeshError {
public:
  using MeshError::MeshError;
};

class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string &what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string &field() const { return field_; }

private:
  std::string field_;
};

class MetricError : public Error {
public:
  using Error::Error;
};

class SummaryError : public Error {
public:
  using Error::Error;
};

class UnsupportedTargetError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

/// Sampler run aborted; carries the iteration that failed.
class RunError : public Error {
public:
  RunError(long iteration, const std::string &what)
      : Error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  long iteration() const { return iteration_; }

private:
  long iteration_;
};

} // namespace eparvi
