#include "hmmreal/recover.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmmreal/error.hpp"

namespace hmmreal {

const char* to_string(RecoveryStrategy s) {
  return s == RecoveryStrategy::FullRankA ? "full-rank-A" : "full-rank-O";
}

NormalizedColumns normalize_columns(const Matrix& C, double tol) {
  NormalizedColumns out;
  out.result.resize(C.rows(), C.cols());
  for (Eigen::Index i = 0; i < C.cols(); ++i) {
    const double raw_sum = C.col(i).sum();
    if (!(raw_sum > 0.0))
      fail(ErrorKind::Numerical, "column " + std::to_string(i) + " has non-positive sum");
    const Vector raw = C.col(i) / raw_sum;
    const Vector clamped = C.col(i).cwiseMax(0.0);
    const double s = clamped.sum();
    if (!(s > 0.0)) fail(ErrorKind::Numerical, "column " + std::to_string(i) + " is entirely negative");
    out.result.col(i) = clamped / s;
    if (raw.minCoeff() < -tol || (out.result.col(i) - raw).cwiseAbs().maxCoeff() > 0.0)
      out.repair = std::max(out.repair, (out.result.col(i) - raw).cwiseAbs().maxCoeff());
  }
  return out;
}

Matrix marginalize_prefix(const Matrix& A, int d, int n, int m) {
  if (m < 0 || m > n) fail(ErrorKind::InvalidInput, "marginalize_prefix needs 0 <= m <= n");
  const std::int64_t rows = checked_power(d, n);
  if (A.rows() != rows) fail(ErrorKind::Structural, "marginalize_prefix: A must have d^n rows");
  const std::int64_t tail = checked_power(d, n - m);
  const std::int64_t head = checked_power(d, m);
  Matrix out = Matrix::Zero(head, A.cols());
  for (std::int64_t h = 0; h < head; ++h) out.row(h) = A.middleRows(h * tail, tail).colwise().sum();
  return out;
}

QEstimate recover_Q_fullrank_A(const Matrix& A, const Matrix& O, int d, int n, double rank_tol) {
  if (n < 2) fail(ErrorKind::InvalidInput, "full-rank-A recovery needs n >= 2");
  const int k = static_cast<int>(A.cols());
  if (numeric_rank(A, rank_tol).rank != k)
    fail(ErrorKind::RankDeficiency, "A lacks full column rank");
  const Matrix K = khatri_rao(O, marginalize_prefix(A, d, n, n - 1));
  if (numeric_rank(K, rank_tol).rank != k)
    fail(ErrorKind::RankDeficiency, "O kr A^(n-1) lacks full column rank");
  QEstimate q;
  q.Q_raw = K.colPivHouseholderQr().solve(A);
  auto fixed = normalize_columns(q.Q_raw);
  q.Q = std::move(fixed.result);
  q.repair = fixed.repair;
  return q;
}

QEstimate recover_Q_fullrank_O(const Matrix& A1, const Matrix& O, double rank_tol) {
  const int k = static_cast<int>(O.cols());
  if (numeric_rank(O, rank_tol).rank != k)
    fail(ErrorKind::RankDeficiency, "O lacks full column rank (needs d >= k)");
  QEstimate q;
  q.Q_raw = O.colPivHouseholderQr().solve(A1);
  auto fixed = normalize_columns(q.Q_raw);
  q.Q = std::move(fixed.result);
  q.repair = fixed.repair;
  return q;
}

RecoveryResult recover_from_factors(const CpFactors& f, int d, int n, double rank_tol) {
  const int k = f.k;
  RecoveryResult res;
  res.backend = f.backend;
  res.cp_residual = f.residual;
  res.alignment.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) res.alignment[static_cast<std::size_t>(i)] = i;

  auto O = normalize_columns(f.C);
  const Vector pi_hat = f.C.colwise().sum().transpose();
  res.O_residual = (f.C - O.result * pi_hat.asDiagonal()).cwiseAbs().maxCoeff();

  bool use_a = false;
  if (n >= 2 && numeric_rank(f.A, rank_tol).rank == k) {
    const Matrix K = khatri_rao(O.result, marginalize_prefix(f.A, d, n, n - 1));
    use_a = numeric_rank(K, rank_tol).rank == k;
  }
  QEstimate q;
  if (use_a) {
    q = recover_Q_fullrank_A(f.A, O.result, d, n, rank_tol);
    res.strategy = RecoveryStrategy::FullRankA;
    const Matrix K = khatri_rao(O.result, marginalize_prefix(f.A, d, n, n - 1));
    res.Q_residual = (f.A - K * q.Q).cwiseAbs().maxCoeff();
  } else {
    const Matrix A1 = marginalize_prefix(f.A, d, n, 1);
    q = recover_Q_fullrank_O(A1, O.result, rank_tol);
    res.strategy = RecoveryStrategy::FullRankO;
    res.Q_residual = (A1 - O.result * q.Q).cwiseAbs().maxCoeff();
    if (n >= 2) res.notes.push_back("A or O kr A^(n-1) rank deficient; used O^+ A^(1)");
  }
  res.repair = std::max(O.repair, q.repair);
  res.model.Q = std::move(q.Q);
  res.model.O = std::move(O.result);
  res.model.pi = stationary_distribution(res.model.Q);
  return res;
}

RecoveryResult realize_hmm(const JointTable& table, int n, const RecoveryOptions& opts) {
  const MomentTensor m = build_tensor(table, n);

  CpFactors factors;
  std::string simdiag_issue;
  bool have = false;
  if (opts.backend == Backend::SimDiag || opts.backend == Backend::Auto) {
    try {
      factors = simdiag_decompose(m.M, opts.simdiag);
      have = true;
    } catch (const Error& e) {
      if (opts.backend == Backend::SimDiag || e.kind() != ErrorKind::Condition) throw;
      simdiag_issue = e.what();
    }
  }
  if (!have) {
    try {
      factors = foobi_decompose(m.M, opts.foobi);
    } catch (const Error& e) {
      if (opts.backend == Backend::Foobi) throw;
      fail(ErrorKind::Realization, "simdiag: " + simdiag_issue + "; foobi: " + e.what());
    }
  }

  RecoveryResult res = recover_from_factors(factors, table.d, n, opts.rank_tol);
  if (!simdiag_issue.empty()) res.notes.push_back("simdiag declined: " + simdiag_issue);
  const JointTable regenerated = joint_table(hmm_to_quasi(res.model), table.N);
  res.verify_error = (regenerated.values - table.values).cwiseAbs().maxCoeff();
  return res;
}

ConditionCheck check_condition_degenerate(int d, int k, int r, std::uint64_t seed) {
  ConditionCheck out;
  if (!(d >= k && k > r && r >= 1)) fail(ErrorKind::InvalidInput, "check needs d >= k > r >= 1");
  try {
    const Hmm model = low_rank_hmm(d, k, r, seed);
    const ConditionalFactors truth = conditional_factors(model, 1);
    const Tensor3 X = cp_tensor(truth.A, truth.B, truth.C);
    FoobiOptions fo;
    fo.expected_k = k;
    fo.seed = seed;
    const CpFactors est = foobi_decompose(X, fo);
    out.detected_k = est.k;
    out.residual = est.residual;

    const auto perm = match_columns(truth.C, est.C);
    double err = 0.0;
    for (int i = 0; i < k; ++i) {
      const auto j = perm[static_cast<std::size_t>(i)];
      err = std::max({err, (truth.A.col(i) - est.A.col(j)).cwiseAbs().maxCoeff(),
                      (truth.B.col(i) - est.B.col(j)).cwiseAbs().maxCoeff(),
                      (truth.C.col(i) - est.C.col(j)).cwiseAbs().maxCoeff()});
    }
    out.factor_error = err;
    out.yes = err <= 1e-6;
    out.diagnostics = out.yes ? "factors recovered up to permutation"
                              : "factors differ from the truth by " + std::to_string(err);
  } catch (const Error& e) {
    out.yes = false;
    out.diagnostics = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return out;
}

}  // namespace hmmreal
