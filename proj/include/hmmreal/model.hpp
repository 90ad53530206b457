#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmmreal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Stationary hidden Markov model with column-stochastic parameters.
///
/// Q(j, i) = P(x_{t+1} = j | x_t = i), O(j, i) = P(y_t = j | x_t = i) and
/// pi is the stationary law (Q pi = pi). States and letters are 0-based.
struct Hmm {
  Matrix Q;
  Matrix O;
  Vector pi;

  int k() const { return static_cast<int>(Q.cols()); }
  int d() const { return static_cast<int>(O.rows()); }
};

/// Operator model (u, v, {A_j}).
///
/// String probabilities compose with the latest letter leftmost:
///   P(y_1..y_N = l_1..l_N) = u^T A_{l_N} ... A_{l_1} v.
/// With u = e, v = pi, A_j = Q Diag(O[j, :]) this reproduces an Hmm exactly.
struct QuasiHmm {
  Vector u;
  Vector v;
  std::vector<Matrix> ops;

  int k() const { return static_cast<int>(u.size()); }
  int d() const { return static_cast<int>(ops.size()); }
};

inline constexpr const char* kOperatorConvention =
    "P(l_1..l_N) = u^T A[l_N] ... A[l_1] v (latest letter leftmost)";

struct BackwardTransition {
  /// Qt(j, i) = P(x_{t-1} = j | x_t = i)
  Matrix Qt;
};

struct EquivalenceWitness {
  enum class Kind { LinearTransform, StatePermutation };

  Kind kind = Kind::LinearTransform;
  bool equivalent = false;
  /// Max-abs mismatch after alignment.
  double residual = 0.0;
  /// Change of basis T with b = (T^T u, T^{-1} v, T^{-1} A_j T), when recoverable.
  std::optional<Matrix> transform;
  /// permutation[i] = column of b matched to column i of a.
  std::vector<int> permutation;
};

struct Violation {
  std::string invariant;
  std::string detail;
};

/// Checks column stochasticity of Q and O, Q pi = pi and positivity of pi.
/// An empty pi is recomputed from Q. Throws Structural on shape mismatch.
std::vector<Violation> validate_hmm(const Hmm& model, double tol = 1e-12);

/// Solves (Q - I) pi = 0 with e^T pi = 1 in the least-squares sense.
/// Throws Degeneracy when (Q - I) has a null space of dimension > 1 and
/// Positivity when some entry is <= tol.
Vector stationary_distribution(const Matrix& Q, double tol = 1e-12);

BackwardTransition backward_transition(const Hmm& model);

/// Assembles an Hmm from (Q, O), computing pi. Throws InvalidInput when the
/// result violates the model invariants.
Hmm make_hmm(Matrix Q, Matrix O, double tol = 1e-10);

QuasiHmm hmm_to_quasi(const Hmm& model);

/// Columns of Q and O drawn independently and flat on the simplex.
Hmm random_hmm(int d, int k, std::uint64_t seed);

/// Cyclic state shift (state i moves to i-1 mod k) with random emissions.
Hmm shift_cycle_hmm(int d, int k, std::uint64_t seed);

/// Transition matrix Q = U V^T of rank r with stochastic factors. r == k
/// defers to random_hmm.
Hmm low_rank_hmm(int d, int k, int r, std::uint64_t seed);

struct NoisyParityParams {
  int stages = 5;         // T
  int corrupted = 3;      // s, 1-based stage whose parity update is skipped
  double flip = 0.1;      // eta, probability the revealed bit is flipped
  double reset_stay = 0.5;  // rho
};

/// Parity-learning chain over binary letters: stages 1..T-1 emit uniform bits,
/// stage T emits the running parity (with the corrupted stage's input
/// skipped) flipped with probability `flip`, then a reset state loops with
/// probability `reset_stay` before restarting. Unreachable states are dropped.
Hmm noisy_parity_hmm(const NoisyParityParams& params);

/// Behavioral comparison of predicted probabilities on every string of length
/// <= probe_len. Reports the change of basis when it can be recovered.
EquivalenceWitness quasi_equivalent(const QuasiHmm& a, const QuasiHmm& b,
                                    int probe_len, double tol);

/// Matches hidden states by emission columns, then checks Q under the match.
EquivalenceWitness hmm_equivalent_up_to_permutation(const Hmm& a, const Hmm& b,
                                                    double tol);

/// Greedy minimal-max-abs matching of columns of `est` to `truth`, ties to
/// the lower index. perm[i] = column of est matched to truth column i.
std::vector<int> match_columns(const Matrix& truth, const Matrix& est);

/// Applies the relabeling: state i of the result is state perm[i] of `model`.
Hmm permute_states(const Hmm& model, const std::vector<int>& perm);

}  // namespace hmmreal
