#pragma once

#include <stdexcept>
#include <string>

namespace qerg {

/// Argument outside the mathematical domain of an operation (t <= 0, eps <= 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Model data violating a MarkovModel invariant (non-stochastic Q, reducible Q, bad V, ...).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dominant eigenvalue of -G is not simple.
struct NondegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground state eigenvector has mixed signs or zeros (reducible chain, A1 violated).
struct PositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// sigma(U_t 1) == 0, so survival-conditioned quantities are undefined.
struct DegenerateSupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClassifierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  int line;
};

}  // namespace qerg
