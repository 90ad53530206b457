#pragma once

#include <stdexcept>
#include <string>

namespace hmmreal {

enum class ErrorKind {
  Structural,      // shape mismatch, malformed model
  Degeneracy,      // non-unique stationary law, eigenvalue collisions, failed joint diagonalization
  Positivity,      // zero stationary mass
  Capacity,        // d^N above the dense-storage guard
  RankDeficiency,  // H0 rank below the requested order
  Condition,       // decomposition preconditions do not hold (Kruskal / kernel dimension)
  Numerical,       // complex spectra, zero column sums
  Split,           // Khatri-Rao column is not rank one
  EmptyProcess,    // H0 is numerically zero
  InvalidInput,    // argument out of range, bad file
  Precondition,    // perturbation utilities called outside their regime
  Realization,     // every decomposition backend failed
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CLI exit code: 2 for rank/condition failures, 3 for invalid input or capacity.
int exit_code(ErrorKind kind);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hmmreal
