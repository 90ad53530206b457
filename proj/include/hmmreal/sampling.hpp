#pragma once

#include <cstdint>
#include <vector>

#include "hmmreal/quasi.hpp"

namespace hmmreal {

struct SampleBatch {
  int d = 0;
  int length = 0;
  std::uint64_t seed = 0;
  std::vector<Letters> sequences;

  std::int64_t count() const { return static_cast<std::int64_t>(sequences.size()); }
};

/// T independent stationary runs: x_0 ~ pi, then emit from O[:, x] and move
/// by Q[:, x]. Sequence t draws from the stream (seed, t), so the batch does
/// not depend on generation order.
SampleBatch sample_sequences(const Hmm& model, std::int64_t count, int length,
                             std::uint64_t seed);

/// Fraction of sequences whose first N letters equal each string. One window
/// per sequence keeps the windows independent.
JointTable empirical_joint(const SampleBatch& batch, int N);

/// All overlapping windows of every sequence. Windows within one sequence
/// are correlated, so this estimator is outside the independent-sample
/// analysis; it exists for single long recordings.
JointTable empirical_joint_windowed(const SampleBatch& batch, int N);

/// Per-entry Hoeffding deviation sqrt(ln(2 m / delta) / (2 T)), union bound
/// over m entries.
double hoeffding_deviation(std::int64_t samples, double entries, double delta);

/// Singular-value floor 4 sqrt(d^n) * Hoeffding deviation for an empirical H0.
double empirical_rank_floor(int d, int n, std::int64_t samples, double delta = 0.01);

/// k^6 d^4 / (eps^4 sigma_k^8) * log(2 k^4 d^2 / eta) with unit constant.
double sample_complexity_surrogate(int k, int d, double sigma_k, double eps, double eta);

struct EstimateOptions {
  /// When unset the rank uses the Hoeffding floor of the sample size.
  std::optional<int> expected_k;
  std::optional<double> rel_tol;
  double floor_delta = 0.01;
  double surrogate_eps = 0.1;
  double surrogate_eta = 0.05;
};

struct Estimate {
  Realization realization;
  JointTable table;
  HankelPair hankel;
  double sample_size_surrogate = 0.0;
};

Estimate estimate_and_realize(const SampleBatch& batch, int n, const EstimateOptions& opts = {});

struct ParameterError {
  double err_u = 0.0;
  double err_v = 0.0;
  double err_ops_max = 0.0;

  double max() const;
};

/// Fits the change of basis carrying `reference` onto `estimate` from their
/// predictions over strings of length <= probe_len, then measures
/// ||u_hat - T^T u||, ||v_hat - T^{-1} v||, max_j ||A_hat_j - T^{-1} A_j T||
/// in the spectral norm.
ParameterError aligned_parameter_error(const QuasiHmm& estimate, const QuasiHmm& reference,
                                       int probe_len);

// ---------------------------------------------------------------------------
// Perturbation inequalities. Each returns (lhs, rhs); lhs <= rhs is expected.
// ---------------------------------------------------------------------------

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;

  bool holds(double slack = 1e-12) const { return lhs <= rhs + slack; }
};

/// sqrt(sum_i (sigma_i(Xhat) - sigma_i(X))^2) against ||Xhat - X||_F.
InequalityCheck mirsky_check(const Matrix& Xhat, const Matrix& X);

struct WedinCheck {
  double left_deviation = 0.0;   // min_R ||U_hat - U R||_2 over orthogonal R
  double right_deviation = 0.0;
  double bound = 0.0;            // sqrt(2) ||E||_F / sigma_k(X)

  bool holds(double slack = 1e-12) const {
    return left_deviation <= bound + slack && right_deviation <= bound + slack;
  }
};

/// Top-k singular subspaces of X and X + E. Throws Precondition unless X has
/// rank k and sigma_k(X) > 2 ||E||_2.
WedinCheck wedin_check(const Matrix& X, const Matrix& E, int k);

enum class MatrixNorm { Spectral, Frobenius };

/// ||prod Ahat_i - prod A_i|| against 2^{m-1} prod ||A_i|| sum ||Ahat_i - A_i|| / ||A_i||.
/// Throws Precondition unless ||Ahat_i - A_i|| <= ||A_i|| for every factor.
InequalityCheck product_perturbation_check(const std::vector<Matrix>& factors,
                                           const std::vector<Matrix>& perturbed,
                                           MatrixNorm norm = MatrixNorm::Spectral);

double matrix_norm(const Matrix& X, MatrixNorm norm);

}  // namespace hmmreal
