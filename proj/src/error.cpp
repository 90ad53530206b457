#include "hmmreal/error.hpp"

namespace hmmreal {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Structural: return "structural";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::Positivity: return "positivity";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::Condition: return "condition";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Split: return "split";
    case ErrorKind::EmptyProcess: return "empty-process";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Realization: return "realization-failure";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Structural:
    case ErrorKind::Capacity:
    case ErrorKind::InvalidInput:
    case ErrorKind::Precondition:
      return 3;
    default:
      return 2;
  }
}

}  // namespace hmmreal
