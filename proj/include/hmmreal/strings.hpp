#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hmmreal/model.hpp"

namespace hmmreal {

// ---------------------------------------------------------------------------
// String indexing
//
// Letters are 0-based. A string (l_1, ..., l_n) maps to
//   L = l_1 d^{n-1} + l_2 d^{n-2} + ... + l_n,
// so the first letter is the most significant digit. Indices are 0-based.
// ---------------------------------------------------------------------------

using Letters = std::vector<int>;

/// Dense tables above this many entries are rejected. HMMREAL_CAPACITY
/// overrides the default of 2^26.
std::int64_t capacity_limit();

/// d^n, throwing Capacity if it exceeds capacity_limit().
std::int64_t checked_power(int d, int n);

std::int64_t index_of(std::span<const int> letters, int d);
Letters string_of(std::int64_t index, int d, int n);

// ---------------------------------------------------------------------------
// Joint probability tables
// ---------------------------------------------------------------------------

enum class Provenance { Exact, Empirical };

struct JointTable {
  int d = 0;
  int N = 0;
  /// values[index_of(l_1..l_N)] = P(y_1..y_N = l_1..l_N)
  Vector values;
  Provenance provenance = Provenance::Exact;
  /// Number of sequences behind an empirical table.
  std::int64_t samples = 0;

  double at(std::span<const int> letters) const { return values(index_of(letters, d)); }
};

/// Operator-product probability of a string (empty string gives u^T v).
double exact_joint(const QuasiHmm& model, std::span<const int> letters);

JointTable joint_table(const QuasiHmm& model, int N);

/// Probabilities of every string of the given length, indexed by index_of.
Vector string_probabilities(const QuasiHmm& model, int length);

/// Row index_of(l) holds u^T A_{l_n} ... A_{l_1}; H0 = future_rows * past_rows^T.
Matrix future_rows(const QuasiHmm& model, int n);

/// Row index_of(l) holds (A_{l_1} ... A_{l_n} v)^T, l listing the most recent letter first.
Matrix past_rows(const QuasiHmm& model, int n);

/// future_rows for lengths 0..max_len, stacked.
Matrix prefix_rows(const QuasiHmm& model, int max_len);

/// Sums out the final letter.
JointTable marginalize_last(const JointTable& table);

/// Reduces the table to its first `length` letters.
JointTable marginal(const JointTable& table, int length);

// ---------------------------------------------------------------------------
// Hankel matrices
// ---------------------------------------------------------------------------

/// H0(L(f), L(p)) = P(y_{-n..-1} = reverse(p), y_{0..n-1} = f)
/// Hj(L(f), L(p)) = P(y_{-n..-1} = reverse(p), y_0 = j, y_{1..n} = f)
/// where the past string p = (l_{-1}, ..., l_{-n}) lists the most recent
/// letter first.
struct HankelPair {
  int d = 0;
  int n = 0;
  Matrix H0;
  std::vector<Matrix> slices;
};

/// Requires table.N == 2n + 1. H0 comes from the length-2n marginal, so it
/// is not the sum of the slices.
HankelPair build_hankel(const JointTable& table, int n);

// ---------------------------------------------------------------------------
// Third-order tensors
// ---------------------------------------------------------------------------

/// Dense n1 x n2 x n3 tensor stored as its mode-3 matricization:
/// unfolded(i * n2 + j, l) = X(i, j, l).
struct Tensor3 {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;
  Matrix unfolded;

  Tensor3() = default;
  Tensor3(int a, int b, int c) : n1(a), n2(b), n3(c), unfolded(Matrix::Zero(Eigen::Index(a) * b, c)) {}

  double& operator()(int i, int j, int l) { return unfolded(Eigen::Index(i) * n2 + j, l); }
  double operator()(int i, int j, int l) const { return unfolded(Eigen::Index(i) * n2 + j, l); }

  /// X(I, I, w): the n1 x n2 slice contracted with w along mode 3.
  Matrix contract3(const Vector& w) const;
};

/// sum_i A[:, i] (x) B[:, i] (x) C[:, i]
Tensor3 cp_tensor(const Matrix& A, const Matrix& B, const Matrix& C);

/// X(V1, V2, V3)_{j1 j2 j3} = sum X_{i1 i2 i3} V1(j1, i1) V2(j2, i2) V3(j3, i3)
Tensor3 multilinear(const Tensor3& X, const Matrix& V1, const Matrix& V2, const Matrix& V3);

struct ConditionalFactors {
  Matrix A;  // d^n x k, A(L(l_1..l_n), m) = P(y_1..y_n = l | x_0 = m)
  Matrix B;  // d^n x k, B(L(l_-1..l_-n), m) = P(y_-1..y_-n = l | x_0 = m)
  Matrix C;  // d x k,   C(l, m) = P(y_0 = l, x_0 = m)
};

/// Moment tensor M(L(future), L(past), y_0) of a length-(2n+1) table.
struct MomentTensor {
  int d = 0;
  int n = 0;
  Tensor3 M;
  /// Ground-truth factors when built from a known model.
  std::optional<ConditionalFactors> factors;
};

MomentTensor build_tensor(const JointTable& table, int n);

/// Also attaches the model's conditional factors and checks M = A (x) B (x) C
/// to 1e-10, throwing Numerical otherwise.
MomentTensor build_tensor(const JointTable& table, int n, const Hmm& truth);

/// A^(1) = O Q, A^(m) = (O kr A^(m-1)) Q; B likewise with the backward
/// transition; C = O Diag(pi).
ConditionalFactors conditional_factors(const Hmm& model, int n);

// ---------------------------------------------------------------------------
// Linear algebra on factor matrices
// ---------------------------------------------------------------------------

/// Column-wise Kronecker product: row j1 * q + j2 of column i is A(j1,i) B(j2,i).
Matrix khatri_rao(const Matrix& A, const Matrix& B);

/// (n1 n2) x n3 matricization along the third mode.
inline const Matrix& matricize3(const Tensor3& X) { return X.unfolded; }
inline const Matrix& matricize3(const MomentTensor& M) { return M.M.unfolded; }

struct RankInfo {
  int rank = 0;
  Vector singular_values;
};

/// Counts singular values above rel_tol * sigma_1.
RankInfo numeric_rank(const Matrix& X, double rel_tol = 1e-8);

/// Counts singular values above an absolute floor.
RankInfo numeric_rank_abs(const Matrix& X, double floor);

/// Largest r such that every r columns are linearly independent. Brute force
/// over column subsets; throws Capacity for more than 20 columns.
int kruskal_rank(const Matrix& X, double tol = 1e-8);

}  // namespace hmmreal
