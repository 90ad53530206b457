#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmmreal/strings.hpp"

namespace hmmreal {

/// How the order of the realization is picked from the spectrum of H0.
struct RankRule {
  /// Keep sigma_i > rel_tol * sigma_1.
  double rel_tol = 1e-8;
  /// When set, keep sigma_i > abs_floor instead (empirical tables).
  std::optional<double> abs_floor;
  /// Known order; overrides the numeric rank when it does not exceed it.
  std::optional<int> expected_k;
};

struct RealizationDiagnostics {
  int detected_rank = 0;   // numeric rank of H0 under the rule
  int used_rank = 0;       // order of the returned model
  Vector singular_values;
  double sigma_k = 0.0;    // smallest retained singular value
  double verify_error = 0.0;
  double norm_residual_u = 0.0;  // max |u^T (sum A_j) - u^T|
  double norm_residual_v = 0.0;  // max |(sum A_j) v - v|
  std::vector<std::string> warnings;
};

struct Realization {
  QuasiHmm model;
  RealizationDiagnostics diagnostics;
};

/// SVD-based realization: with H0 = U_H D V_H^T truncated to the chosen
/// order, U = U_H D^{1/2}, V = V_H D^{1/2},
///   u = U^T e, v = V^T e, A_j = U^+ H_j (V^+)^T.
/// Throws EmptyProcess if H0 has rank 0 and RankDeficiency if expected_k
/// exceeds the numeric rank. verify_error is left at zero; see
/// verify_realization.
Realization realize_quasi(const HankelPair& hankel, const RankRule& rule = {});

struct Prediction {
  double value = 0.0;
  /// Set when the raw operator product is negative.
  bool negative = false;
};

/// Raw operator-product probability of a string; never clamped.
Prediction predict(const QuasiHmm& model, std::span<const int> letters);

struct VerifyReport {
  double max_error = 0.0;
  int max_len = 0;
  bool sampled = false;        // some lengths were sampled instead of enumerated
  std::int64_t strings_checked = 0;
};

/// Maximum |model - reference| over all strings of length 1..max_len.
/// Lengths with more than `enumeration_limit` strings are probed with a
/// seeded uniform sample of 10^5 strings.
VerifyReport verify_realization(const QuasiHmm& model, const QuasiHmm& reference, int max_len,
                                std::int64_t enumeration_limit = std::int64_t{1} << 20,
                                std::uint64_t seed = 0);

/// Against a table, lengths above table.N are not available; comparison runs
/// over lengths 1..min(max_len, table.N) using marginals of the table.
VerifyReport verify_realization(const QuasiHmm& model, const JointTable& reference, int max_len);

/// Max-abs residuals of u^T (sum A_j) = u^T and (sum A_j) v = v.
std::pair<double, double> normalization_residuals(const QuasiHmm& model);

}  // namespace hmmreal
