#ifndef SCVN_ERRORS_HPP
#define SCVN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace scvn {

// Base class for all scvn errors so callers can catch the whole family.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Config / input validation failed (CLI exit code 2).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Scenario generation produced no vehicles.
class EmptyScenario : public Error {
 public:
  explicit EmptyScenario(const std::string& msg) : Error(msg) {}
};

class InvalidDistance : public Error {
 public:
  explicit InvalidDistance(const std::string& msg) : Error(msg) {}
};

class InvalidRank : public Error {
 public:
  explicit InvalidRank(const std::string& msg) : Error(msg) {}
};

// preference-first construction cannot reach the satisfaction threshold.
class InfeasiblePreference : public Error {
 public:
  explicit InfeasiblePreference(const std::string& msg) : Error(msg) {}
};

// Queue utilization at or above 1; carries the offending utilization.
class UnstableQueue : public Error {
 public:
  UnstableQueue(const std::string& msg, double utilization)
      : Error(msg), utilization_(utilization) {}
  double utilization() const { return utilization_; }

 private:
  double utilization_;
};

// A vehicle pair admits no feasible joint construction.
class InfeasiblePair : public Error {
 public:
  explicit InfeasiblePair(const std::string& msg) : Error(msg) {}
};

// The pairing subproblem has no perfect pairing (CLI exit code 3).
class InfeasiblePairing : public Error {
 public:
  explicit InfeasiblePairing(const std::string& msg) : Error(msg) {}
};

class OracleTooLarge : public Error {
 public:
  explicit OracleTooLarge(const std::string& msg) : Error(msg) {}
};

class NoFeasibleSolution : public Error {
 public:
  explicit NoFeasibleSolution(const std::string& msg) : Error(msg) {}
};

}  // namespace scvn

#endif  // SCVN_ERRORS_HPP
