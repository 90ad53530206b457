#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hmmreal/strings.hpp"

namespace hmmreal {

enum class Backend { Auto, SimDiag, Foobi };

const char* to_string(Backend backend);
Backend backend_from_string(const std::string& name);

/// CP factors of a third-order tensor, X = A (x) B (x) C.
struct CpFactors {
  int k = 0;
  Matrix A;  // columns stochastic
  Matrix B;  // columns stochastic
  Matrix C;  // carries the scale
  double residual = 0.0;  // max |X - A (x) B (x) C|
  Backend backend = Backend::SimDiag;
  int attempts = 1;
};

struct SimDiagOptions {
  double rank_tol = 1e-8;
  /// Reciprocal eigenvalue pairs must satisfy |lambda mu - 1| <= pairing_tol;
  /// eigenvalues closer than this (relative) count as a collision.
  double pairing_tol = 1e-6;
  /// Relative imaginary part above which the spectrum is declared complex.
  double imag_tol = 1e-6;
  /// Reconstruction error above which the run is a condition failure.
  double residual_tol = 1e-8;
  std::uint64_t seed = 0;
  int retries = 5;
  /// Alternating least-squares sweeps applied when the algebraic estimate
  /// misses the residual target.
  int polish_sweeps = 50;
  /// Known order; overrides detection on the compressed slice. Still a
  /// condition failure when sigma_k of X(I, I, e) is at rounding level.
  std::optional<int> expected_k;
};

/// Simultaneous diagonalization for tensors whose A and B factors have full
/// column rank. Two random mode-3 projections are compressed to the rank-k
/// subspaces of X(I, I, e); the eigenvectors of M1 M2^{-1} and of
/// (M1^{-1} M2)^T give A and B, paired through reciprocal eigenvalues.
/// C is solved from the mode-3 matricization.
CpFactors simdiag_decompose(const Tensor3& X, const SimDiagOptions& opts = {});

struct FoobiOptions {
  double rank_tol = 1e-8;
  /// Relative singular-value threshold for the rank-one constraint kernel.
  double kernel_tol = 1e-9;
  /// Joint diagonalization: off-diagonal threshold and sweep cap.
  double jd_tol = 1e-12;
  int jd_max_sweeps = 200;
  /// Relative off-diagonal mass left after joint diagonalization.
  double jd_accept = 1e-6;
  /// Acceptance thresholds on the final result.
  double residual_tol = 1e-8;
  double split_tol = 1e-6;
  /// When set, a different numeric rank of the matricization is a condition failure.
  std::optional<int> expected_k;
  std::uint64_t seed = 0;
};

/// Fourth-order-cumulant style decomposition for the case where C and
/// A kr B have full column rank but A, B need not.
CpFactors foobi_decompose(const Tensor3& X, const FoobiOptions& opts = {});

struct RankOneSplit {
  Vector a;
  Vector b;
  double residual = 0.0;  // sigma_2 / sigma_1
};

/// Best rank-one factorization of col reshaped to p x q (row i holds
/// col[i*q .. i*q+q-1]), returned as a b^T with the sign fixed so that the
/// largest-magnitude entry of b is positive. Throws Numerical on a zero column.
RankOneSplit rank_one_kr_factor(const Vector& col, int p, int q);

/// Scales A and B columns to sum to one, moving the scale into C.
void normalize_factor_columns(Matrix& A, Matrix& B, Matrix& C);

/// Max-abs error of X against A (x) B (x) C.
double cp_residual(const Tensor3& X, const Matrix& A, const Matrix& B, const Matrix& C);

struct JointDiagResult {
  Matrix W;          // H_i ~ W Lambda_i W^T
  double off_diagonal = 0.0;  // relative off-diagonal mass after refinement
  int sweeps = 0;
};

/// Congruence joint diagonalization of symmetric matrices: a generalized
/// eigenvector start from two random combinations, refined by Jacobi
/// rotations on the transformed set.
JointDiagResult joint_diagonalize(const std::vector<Matrix>& H, double tol, int max_sweeps,
                                  std::uint64_t seed);

}  // namespace hmmreal
