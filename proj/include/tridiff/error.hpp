#pragma once

#include <stdexcept>
#include <string>

namespace tridiff {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad CSV, bad mapping, invalid config. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// The estimator could not produce a number on this data. CLI exit code 3.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// A required (s,g,i) cell has no units.
class EmptyCellError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class RankError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

// Logistic fit diverged; callers may drop covariates and retry.
class SeparationError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

// Fitted pairwise propensities put too much mass on single units.
class OverlapError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class SingularError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

// Too many failed Monte Carlo iterations or bootstrap replicates. CLI exit code 4.
class StudyQualityError : public Error {
 public:
  using Error::Error;
};

}  // namespace tridiff
