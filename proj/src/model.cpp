#include "hmmreal/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"
#include "hmmreal/strings.hpp"

namespace hmmreal {
namespace {

std::string describe(const char* what, Eigen::Index col, double value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " column " << col << ": " << value;
  return os.str();
}

void check_stochastic(const Matrix& X, const char* name, double tol,
                      std::vector<Violation>& out) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double s = X.col(j).sum();
    if (std::abs(s - 1.0) > tol)
      out.push_back({std::string(name) + " column-stochastic",
                     describe("sum of", j, s)});
    const double lo = X.col(j).minCoeff();
    if (lo < -tol)
      out.push_back({std::string(name) + " nonnegative", describe("min entry of", j, lo)});
  }
}

Hmm finish(Matrix Q, Matrix O) {
  Hmm m{std::move(Q), std::move(O), {}};
  m.pi = stationary_distribution(m.Q);
  return m;
}

}  // namespace

std::vector<Violation> validate_hmm(const Hmm& model, double tol) {
  const auto& Q = model.Q;
  const auto& O = model.O;
  if (Q.rows() != Q.cols() || Q.cols() == 0)
    fail(ErrorKind::Structural, "Q must be a non-empty square matrix");
  if (O.cols() != Q.cols() || O.rows() == 0)
    fail(ErrorKind::Structural, "O must be d x k with k = Q.cols()");
  if (model.pi.size() != 0 && model.pi.size() != Q.cols())
    fail(ErrorKind::Structural, "pi must have length k");

  std::vector<Violation> out;
  check_stochastic(Q, "Q", tol, out);
  check_stochastic(O, "O", tol, out);

  Vector pi = model.pi;
  if (pi.size() == 0) {
    try {
      pi = stationary_distribution(Q, tol);
    } catch (const Error& e) {
      out.push_back({"pi unique and positive", e.what()});
      return out;
    }
  }
  const double drift = (Q * pi - pi).cwiseAbs().maxCoeff();
  if (drift > std::max(tol, 1e-10))
    out.push_back({"Q pi = pi", "max |Q pi - pi| = " + std::to_string(drift)});
  if (std::abs(pi.sum() - 1.0) > std::max(tol, 1e-10))
    out.push_back({"pi sums to one", "sum = " + std::to_string(pi.sum())});
  if (pi.minCoeff() <= 0.0)
    out.push_back({"pi positive", "min entry = " + std::to_string(pi.minCoeff())});
  return out;
}

Vector stationary_distribution(const Matrix& Q, double tol) {
  if (Q.rows() != Q.cols() || Q.rows() == 0)
    fail(ErrorKind::Structural, "transition matrix must be non-empty and square");
  const Eigen::Index k = Q.rows();
  const Matrix shifted = Q - Matrix::Identity(k, k);

  Eigen::JacobiSVD<Matrix> svd(shifted);
  const Vector& s = svd.singularValues();
  const double null_tol = 1e-9 * std::max(1.0, s(0));
  const auto nullity = (s.array() <= null_tol).count();
  if (nullity > 1)
    fail(ErrorKind::Degeneracy, "stationary distribution is not unique (null space of Q - I has dimension " +
                                    std::to_string(nullity) + ")");

  Matrix aug(k + 1, k);
  aug.topRows(k) = shifted;
  aug.row(k).setOnes();
  Vector rhs = Vector::Zero(k + 1);
  rhs(k) = 1.0;
  Vector pi = aug.colPivHouseholderQr().solve(rhs);
  if (pi.minCoeff() <= tol)
    fail(ErrorKind::Positivity,
         "stationary distribution has a non-positive entry: " + std::to_string(pi.minCoeff()));
  return pi;
}

BackwardTransition backward_transition(const Hmm& model) {
  const Vector& pi = model.pi;
  if (pi.size() != model.Q.cols() || (pi.array() <= 0.0).any())
    fail(ErrorKind::Positivity, "backward transition needs a strictly positive stationary law");
  // Qt = Diag(pi) Q^T Diag(pi)^{-1}
  Matrix Qt = pi.asDiagonal() * model.Q.transpose() * pi.cwiseInverse().asDiagonal();
  return {std::move(Qt)};
}

Hmm make_hmm(Matrix Q, Matrix O, double tol) {
  Hmm m{std::move(Q), std::move(O), {}};
  auto issues = validate_hmm(m, tol);
  if (!issues.empty()) {
    std::string msg = "invalid HMM:";
    for (const auto& v : issues) msg += " [" + v.invariant + ": " + v.detail + "]";
    fail(ErrorKind::InvalidInput, msg);
  }
  m.pi = stationary_distribution(m.Q);
  return m;
}

QuasiHmm hmm_to_quasi(const Hmm& model) {
  QuasiHmm q;
  q.u = Vector::Ones(model.k());
  q.v = model.pi;
  q.ops.reserve(model.d());
  for (int j = 0; j < model.d(); ++j)
    q.ops.push_back(model.Q * model.O.row(j).transpose().asDiagonal());
  return q;
}

Hmm random_hmm(int d, int k, std::uint64_t seed) {
  if (d < 2 || k < 1) fail(ErrorKind::InvalidInput, "random_hmm needs d >= 2 and k >= 1");
  Rng rng(seed);
  Matrix Q(k, k), O(d, k);
  for (int i = 0; i < k; ++i) Q.col(i) = rng.simplex(k);
  for (int i = 0; i < k; ++i) O.col(i) = rng.simplex(d);
  return finish(std::move(Q), std::move(O));
}

Hmm shift_cycle_hmm(int d, int k, std::uint64_t seed) {
  if (d < 2 || k < 1) fail(ErrorKind::InvalidInput, "shift_cycle_hmm needs d >= 2 and k >= 1");
  Rng rng(seed);
  Matrix Q = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) Q((i + k - 1) % k, i) = 1.0;
  Matrix O(d, k);
  for (int i = 0; i < k; ++i) O.col(i) = rng.simplex(d);
  return finish(std::move(Q), std::move(O));
}

Hmm low_rank_hmm(int d, int k, int r, std::uint64_t seed) {
  if (r == k) return random_hmm(d, k, seed);
  if (!(d >= k && k > r && r >= 1))
    fail(ErrorKind::InvalidInput, "low_rank_hmm needs d >= k > r >= 1");

  constexpr int kMaxDraws = 32;
  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    // Q = U V^T with stochastic columns in U (k x r) and in V^T (r x k):
    // every column of Q is a convex combination of the columns of U.
    Matrix U(k, r), Vt(r, k);
    for (int j = 0; j < r; ++j) U.col(j) = rng.simplex(k);
    for (int i = 0; i < k; ++i) Vt.col(i) = rng.simplex(r);
    Matrix Q = U * Vt;
    Matrix O(d, k);
    for (int i = 0; i < k; ++i) O.col(i) = rng.simplex(d);

    if (numeric_rank(Q, 1e-8).rank != r) continue;
    if (numeric_rank(O, 1e-8).rank != k) continue;
    try {
      return finish(std::move(Q), std::move(O));
    } catch (const Error&) {
      continue;
    }
  }
  fail(ErrorKind::Degeneracy, "low_rank_hmm: no admissible draw after " +
                                  std::to_string(kMaxDraws) + " attempts");
}

Hmm noisy_parity_hmm(const NoisyParityParams& p) {
  const int T = p.stages;
  const int s = p.corrupted;
  if (T < 3 || s < 2 || s > T - 1)
    fail(ErrorKind::InvalidInput, "noisy parity needs T >= 3 and 2 <= s <= T-1");
  if (!(p.flip >= 0.0 && p.flip <= 1.0) || !(p.reset_stay >= 0.0 && p.reset_stay < 1.0))
    fail(ErrorKind::InvalidInput, "noisy parity needs eta in [0,1] and rho in [0,1)");

  // State keys: (stage, parity, emitted bit); stage T has no bit, the reset
  // stage T+1 has neither.
  using Key = std::tuple<int, int, int>;
  const Key reset{T + 1, 0, 0};
  auto successors = [&](const Key& key) {
    std::vector<std::pair<Key, double>> next;
    const auto [t, parity, bit] = key;
    if (t == T + 1) {
      if (p.reset_stay > 0.0) next.push_back({reset, p.reset_stay});
      next.push_back({{1, 0, 0}, 0.5 * (1.0 - p.reset_stay)});
      next.push_back({{1, 0, 1}, 0.5 * (1.0 - p.reset_stay)});
    } else if (t == T) {
      next.push_back({reset, 1.0});
    } else {
      const int np = (t + 1 == s) ? parity : (parity ^ bit);
      if (t + 1 == T) {
        next.push_back({{T, np, 0}, 1.0});
      } else {
        next.push_back({{t + 1, np, 0}, 0.5});
        next.push_back({{t + 1, np, 1}, 0.5});
      }
    }
    return next;
  };

  // Reachability from the reset state.
  std::map<Key, int> reachable;
  std::vector<Key> frontier{reset};
  reachable[reset] = 0;
  while (!frontier.empty()) {
    Key cur = frontier.back();
    frontier.pop_back();
    for (const auto& [nk, prob] : successors(cur)) {
      (void)prob;
      if (reachable.emplace(nk, 0).second) frontier.push_back(nk);
    }
  }
  // std::map orders keys stage-major, which fixes the state numbering.
  int idx = 0;
  for (auto& [key, id] : reachable) id = idx++;
  const int k = idx;

  Matrix Q = Matrix::Zero(k, k);
  Matrix O = Matrix::Zero(2, k);
  for (const auto& [key, id] : reachable) {
    for (const auto& [nk, prob] : successors(key)) Q(reachable.at(nk), id) += prob;
    const auto [t, parity, bit] = key;
    if (t == T + 1) {
      O(0, id) = 1.0;
    } else if (t == T) {
      O(parity, id) += 1.0 - p.flip;
      O(1 - parity, id) += p.flip;
    } else {
      O(bit, id) = 1.0;
    }
  }
  return finish(std::move(Q), std::move(O));
}

EquivalenceWitness quasi_equivalent(const QuasiHmm& a, const QuasiHmm& b, int probe_len,
                                    double tol) {
  if (a.d() != b.d() || a.k() != b.k())
    fail(ErrorKind::Structural, "quasi_equivalent: models differ in d or k");
  EquivalenceWitness w;
  w.kind = EquivalenceWitness::Kind::LinearTransform;
  double residual = std::abs(a.u.dot(a.v) - b.u.dot(b.v));
  for (int len = 1; len <= probe_len; ++len) {
    const Vector pa = string_probabilities(a, len);
    const Vector pb = string_probabilities(b, len);
    residual = std::max(residual, (pa - pb).cwiseAbs().maxCoeff());
  }
  w.residual = residual;
  w.equivalent = residual <= tol;

  // b's prefix rows equal a's prefix rows times T; solvable when a's rows
  // span R^k.
  if (w.equivalent) {
    Matrix Ea = prefix_rows(a, probe_len);
    Matrix Eb = prefix_rows(b, probe_len);
    if (numeric_rank(Ea, 1e-10).rank == a.k()) {
      Matrix T = Ea.completeOrthogonalDecomposition().solve(Eb);
      if (numeric_rank(T, 1e-10).rank == a.k()) w.transform = std::move(T);
    }
  }
  return w;
}

std::vector<int> match_columns(const Matrix& truth, const Matrix& est) {
  if (truth.rows() != est.rows() || truth.cols() != est.cols())
    fail(ErrorKind::Structural, "match_columns: shapes differ");
  const Eigen::Index k = truth.cols();
  Matrix cost(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      cost(i, j) = (truth.col(i) - est.col(j)).cwiseAbs().maxCoeff();

  std::vector<int> perm(static_cast<std::size_t>(k), -1);
  std::vector<bool> row_used(static_cast<std::size_t>(k), false), col_used(static_cast<std::size_t>(k), false);
  for (Eigen::Index step = 0; step < k; ++step) {
    // cheapest remaining pair; strict comparison keeps the lowest indices on ties
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (cost(i, j) < best) {
          best = cost(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    row_used[static_cast<std::size_t>(bi)] = true;
    col_used[static_cast<std::size_t>(bj)] = true;
    perm[static_cast<std::size_t>(bi)] = static_cast<int>(bj);
  }
  return perm;
}

Hmm permute_states(const Hmm& model, const std::vector<int>& perm) {
  const int k = model.k();
  if (static_cast<int>(perm.size()) != k) fail(ErrorKind::Structural, "permutation size mismatch");
  Hmm out;
  out.Q.resize(k, k);
  out.O.resize(model.d(), k);
  out.pi.resize(k);
  for (int i = 0; i < k; ++i) {
    out.O.col(i) = model.O.col(perm[i]);
    out.pi(i) = model.pi.size() == k ? model.pi(perm[i]) : 0.0;
    for (int j = 0; j < k; ++j) out.Q(i, j) = model.Q(perm[i], perm[j]);
  }
  if (model.pi.size() != k) out.pi.resize(0);
  return out;
}

EquivalenceWitness hmm_equivalent_up_to_permutation(const Hmm& a, const Hmm& b, double tol) {
  if (a.d() != b.d() || a.k() != b.k())
    fail(ErrorKind::Structural, "hmm_equivalent_up_to_permutation: models differ in d or k");
  const int k = a.k();

  auto o_error = [&](const std::vector<int>& perm) {
    double e = 0.0;
    for (int i = 0; i < k; ++i)
      e = std::max(e, (a.O.col(i) - b.O.col(perm[i])).cwiseAbs().maxCoeff());
    return e;
  };
  auto q_error = [&](const std::vector<int>& perm) {
    double e = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) e = std::max(e, std::abs(a.Q(i, j) - b.Q(perm[i], perm[j])));
    return e;
  };

  std::vector<int> best(k);
  std::iota(best.begin(), best.end(), 0);
  if (k <= 8) {
    std::vector<int> perm = best;
    double best_o = std::numeric_limits<double>::infinity();
    double best_all = best_o;
    do {
      const double eo = o_error(perm);
      if (eo > best_o + 1e-15) continue;
      const double all = std::max(eo, q_error(perm));
      if (eo < best_o - 1e-15 || all < best_all) {
        best_o = std::min(best_o, eo);
        best_all = all;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = match_columns(a.O, b.O);
  }

  EquivalenceWitness w;
  w.kind = EquivalenceWitness::Kind::StatePermutation;
  w.permutation = best;
  w.residual = std::max(o_error(best), q_error(best));
  w.equivalent = w.residual <= tol;
  return w;
}

}  // namespace hmmreal
