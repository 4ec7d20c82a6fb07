#pragma once

#include <stdexcept>
#include <string>

namespace odcal {

// Process exit codes used by the CLI. Library code throws; the CLI maps
// exception types onto these.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  validation = 2,
  gridlock = 3,
  partial = 4,
};

// Malformed input file (bad JSON, missing column, unparsable number).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a model invariant
// (dangling adjacency, nonpositive attribute, dimension mismatch).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No directed route exists between the requested zones.
class NoPathError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Fewer than half of the generated vehicles completed their trip:
// the demand is infeasible or the horizon too short.
class GridlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace odcal
