#pragma once

#include <stdexcept>
#include <string>

namespace gpopt {

/// Argument outside the domain of a function or operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tangent-point search inside an envelope construction did not converge.
class RootFindError : public std::runtime_error {
 public:
  RootFindError() : std::runtime_error("envelope root-find failure") {}
  explicit RootFindError(const std::string& what) : std::runtime_error(what) {}
};

/// Covariance matrix could not be factorized even after jitter escalation.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite() : std::runtime_error("covariance matrix not PD") {}
};

/// Malformed model document; the message names the offending field path.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown in the LP solver.
class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpopt
