#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmmreal/tensor.hpp"

namespace hmmreal {

enum class RecoveryStrategy { FullRankA, FullRankO };

const char* to_string(RecoveryStrategy s);

struct NormalizedColumns {
  Matrix result;
  /// Largest change made by clamping negatives and renormalizing.
  double repair = 0.0;
};

/// Scales columns of C to sum to one. Entries below -tol are reported; all
/// negatives are clamped to zero before renormalizing. Throws Numerical on a
/// column with non-positive sum.
NormalizedColumns normalize_columns(const Matrix& C, double tol = 1e-10);

/// Sums out letters m+1..n of a d^n x k conditional table.
Matrix marginalize_prefix(const Matrix& A, int d, int n, int m);

struct QEstimate {
  Matrix Q;          // repaired, column stochastic
  Matrix Q_raw;      // before repair
  double repair = 0.0;
};

/// Q = (O kr A^(n-1))^+ A. Throws RankDeficiency when A or the Khatri-Rao
/// product lacks full column rank.
QEstimate recover_Q_fullrank_A(const Matrix& A, const Matrix& O, int d, int n,
                               double rank_tol = 1e-8);

/// Q = O^+ A^(1). Throws RankDeficiency when O lacks full column rank.
QEstimate recover_Q_fullrank_O(const Matrix& A1, const Matrix& O, double rank_tol = 1e-8);

struct RecoveryOptions {
  Backend backend = Backend::Auto;
  SimDiagOptions simdiag;
  FoobiOptions foobi;
  double rank_tol = 1e-8;
};

struct RecoveryResult {
  Hmm model;
  RecoveryStrategy strategy = RecoveryStrategy::FullRankA;
  Backend backend = Backend::SimDiag;
  std::vector<int> alignment;  // identity unless aligned against a reference
  double cp_residual = 0.0;
  double O_residual = 0.0;     // |C - O Diag(pi_hat)| after normalization
  double Q_residual = 0.0;     // |A - (O kr A^(n-1)) Q| or |A1 - O Q|
  double repair = 0.0;         // stochasticity repair on O and Q
  double verify_error = 0.0;   // regenerated table vs. input
  std::vector<std::string> notes;
};

/// Builds the moment tensor, decomposes it, recovers O and Q and checks the
/// regenerated joint table against the input.
RecoveryResult realize_hmm(const JointTable& table, int n, const RecoveryOptions& opts = {});

/// Recovery from already-decomposed factors (used by realize_hmm).
RecoveryResult recover_from_factors(const CpFactors& factors, int d, int n, double rank_tol);

struct ConditionCheck {
  bool yes = false;
  double factor_error = 0.0;  // max-abs factor mismatch after alignment
  double residual = 0.0;
  int detected_k = 0;
  std::string diagnostics;
};

/// Samples low_rank_hmm(d, k, r, seed), forms M from A = OQ, B = O Qt,
/// C = O Diag(pi), and runs FOOBI. "yes" iff the factors come back up to a
/// common column permutation within 1e-6.
ConditionCheck check_condition_degenerate(int d, int k, int r, std::uint64_t seed);

}  // namespace hmmreal
