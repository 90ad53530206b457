#include "hmmreal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"

namespace hmmreal {

SampleBatch sample_sequences(const Hmm& model, std::int64_t count, int length, std::uint64_t seed) {
  if (length < 1) fail(ErrorKind::InvalidInput, "sequence length must be >= 1");
  if (count < 0) fail(ErrorKind::InvalidInput, "sequence count must be >= 0");
  SampleBatch batch;
  batch.d = model.d();
  batch.length = length;
  batch.seed = seed;
  batch.sequences.resize(static_cast<std::size_t>(count));
  for (std::int64_t t = 0; t < count; ++t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    Letters& s = batch.sequences[static_cast<std::size_t>(t)];
    s.resize(static_cast<std::size_t>(length));
    int x = rng.categorical(model.pi);
    for (int i = 0; i < length; ++i) {
      s[static_cast<std::size_t>(i)] = rng.categorical(model.O.col(x));
      x = rng.categorical(model.Q.col(x));
    }
  }
  return batch;
}

namespace {

JointTable count_windows(const SampleBatch& batch, int N, bool all_windows) {
  if (N < 1) fail(ErrorKind::InvalidInput, "window length must be >= 1");
  if (batch.length < N)
    fail(ErrorKind::InvalidInput, "sequences of length " + std::to_string(batch.length) +
                                      " are shorter than the window " + std::to_string(N));
  if (batch.sequences.empty()) fail(ErrorKind::InvalidInput, "empty sample batch");
  JointTable t;
  t.d = batch.d;
  t.N = N;
  t.provenance = Provenance::Empirical;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(checked_power(batch.d, N)), 0);
  std::int64_t total = 0;
  for (const auto& s : batch.sequences) {
    const int last = all_windows ? static_cast<int>(s.size()) - N : 0;
    for (int start = 0; start <= last; ++start) {
      ++counts[static_cast<std::size_t>(index_of(std::span(s).subspan(start, N), batch.d))];
      ++total;
    }
  }
  t.samples = total;
  t.values.resize(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i)
    t.values(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]) / static_cast<double>(total);
  return t;
}

}  // namespace

JointTable empirical_joint(const SampleBatch& batch, int N) { return count_windows(batch, N, false); }

JointTable empirical_joint_windowed(const SampleBatch& batch, int N) {
  return count_windows(batch, N, true);
}

double hoeffding_deviation(std::int64_t samples, double entries, double delta) {
  if (samples < 1 || !(delta > 0.0) || !(entries >= 1.0))
    fail(ErrorKind::InvalidInput, "hoeffding_deviation needs samples >= 1, entries >= 1, delta > 0");
  return std::sqrt(std::log(2.0 * entries / delta) / (2.0 * static_cast<double>(samples)));
}

double empirical_rank_floor(int d, int n, std::int64_t samples, double delta) {
  const double entries = std::pow(static_cast<double>(d), 2 * n + 1);
  return 4.0 * std::sqrt(std::pow(static_cast<double>(d), n)) * hoeffding_deviation(samples, entries, delta);
}

double sample_complexity_surrogate(int k, int d, double sigma_k, double eps, double eta) {
  const double kk = k;
  const double dd = d;
  return std::pow(kk, 6) * std::pow(dd, 4) / (std::pow(eps, 4) * std::pow(sigma_k, 8)) *
         std::log(2.0 * std::pow(kk, 4) * dd * dd / eta);
}

Estimate estimate_and_realize(const SampleBatch& batch, int n, const EstimateOptions& opts) {
  if (n < 1) fail(ErrorKind::InvalidInput, "window half-length n must be >= 1");
  if (batch.length < 2 * n + 1)
    fail(ErrorKind::InvalidInput, "estimation at n = " + std::to_string(n) +
                                      " needs sequences of length >= " + std::to_string(2 * n + 1));
  Estimate est;
  est.table = empirical_joint(batch, 2 * n + 1);
  est.hankel = build_hankel(est.table, n);

  RankRule rule;
  rule.expected_k = opts.expected_k;
  if (opts.rel_tol)
    rule.rel_tol = *opts.rel_tol;
  else if (!opts.expected_k)
    rule.abs_floor = empirical_rank_floor(batch.d, n, batch.count(), opts.floor_delta);
  est.realization = realize_quasi(est.hankel, rule);

  auto& diag = est.realization.diagnostics;
  diag.verify_error = verify_realization(est.realization.model, est.table, 2 * n + 1).max_error;
  est.sample_size_surrogate = sample_complexity_surrogate(diag.used_rank, batch.d, diag.sigma_k,
                                                          opts.surrogate_eps, opts.surrogate_eta);
  return est;
}

double ParameterError::max() const { return std::max({err_u, err_v, err_ops_max}); }

ParameterError aligned_parameter_error(const QuasiHmm& estimate, const QuasiHmm& reference,
                                       int probe_len) {
  if (estimate.k() != reference.k() || estimate.d() != reference.d())
    fail(ErrorKind::Precondition, "aligned_parameter_error needs models of equal order and alphabet");
  // Rows u^T A_s of the estimate equal (rows of the reference) * T.
  const Matrix R = prefix_rows(reference, probe_len);
  const Matrix Rh = prefix_rows(estimate, probe_len);
  const auto qr = R.colPivHouseholderQr();
  if (qr.rank() < reference.k())
    fail(ErrorKind::RankDeficiency, "reference prefix rows do not span the state space; raise probe_len");
  const Matrix T = qr.solve(Rh);
  const auto lu = T.fullPivLu();
  if (!lu.isInvertible()) fail(ErrorKind::Numerical, "fitted change of basis is singular");
  const Matrix Ti = lu.inverse();

  ParameterError e;
  e.err_u = (estimate.u - T.transpose() * reference.u).norm();
  e.err_v = (estimate.v - Ti * reference.v).norm();
  for (std::size_t j = 0; j < reference.ops.size(); ++j)
    e.err_ops_max = std::max(e.err_ops_max,
                             matrix_norm(estimate.ops[j] - Ti * reference.ops[j] * T, MatrixNorm::Spectral));
  return e;
}

double matrix_norm(const Matrix& X, MatrixNorm norm) {
  if (X.size() == 0) return 0.0;
  if (norm == MatrixNorm::Frobenius) return X.norm();
  return Eigen::JacobiSVD<Matrix>(X).singularValues()(0);
}

InequalityCheck mirsky_check(const Matrix& Xhat, const Matrix& X) {
  if (Xhat.rows() != X.rows() || Xhat.cols() != X.cols())
    fail(ErrorKind::Structural, "mirsky_check: shape mismatch");
  const Vector a = Eigen::JacobiSVD<Matrix>(Xhat).singularValues();
  const Vector b = Eigen::JacobiSVD<Matrix>(X).singularValues();
  return {(a - b).norm(), (Xhat - X).norm()};
}

namespace {

// min over orthogonal R of ||Uhat - U R||_2 (orthogonal Procrustes).
double aligned_deviation(const Matrix& Uhat, const Matrix& U) {
  Eigen::JacobiSVD<Matrix> svd(U.transpose() * Uhat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix R = svd.matrixU() * svd.matrixV().transpose();
  return matrix_norm(Uhat - U * R, MatrixNorm::Spectral);
}

}  // namespace

WedinCheck wedin_check(const Matrix& X, const Matrix& E, int k) {
  if (X.rows() != E.rows() || X.cols() != E.cols()) fail(ErrorKind::Structural, "wedin_check: shape mismatch");
  if (k < 1 || k > std::min(X.rows(), X.cols())) fail(ErrorKind::InvalidInput, "wedin_check: bad k");
  Eigen::JacobiSVD<Matrix> sx(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = sx.singularValues();
  const double sigma_k = sv(k - 1);
  if (k < sv.size() && sv(k) > 1e-12 * sv(0))
    fail(ErrorKind::Precondition, "wedin_check needs X of rank k (sigma_{k+1} > 0)");
  const double e2 = matrix_norm(E, MatrixNorm::Spectral);
  if (!(sigma_k > 2.0 * e2))
    fail(ErrorKind::Precondition, "wedin_check needs sigma_k(X) > 2 ||E||_2");
  Eigen::JacobiSVD<Matrix> sh(X + E, Eigen::ComputeThinU | Eigen::ComputeThinV);

  WedinCheck w;
  w.left_deviation = aligned_deviation(sh.matrixU().leftCols(k), sx.matrixU().leftCols(k));
  w.right_deviation = aligned_deviation(sh.matrixV().leftCols(k), sx.matrixV().leftCols(k));
  w.bound = std::sqrt(2.0) * E.norm() / sigma_k;
  return w;
}

InequalityCheck product_perturbation_check(const std::vector<Matrix>& factors,
                                           const std::vector<Matrix>& perturbed, MatrixNorm norm) {
  if (factors.empty() || factors.size() != perturbed.size())
    fail(ErrorKind::InvalidInput, "product_perturbation_check needs matching non-empty factor lists");
  Matrix prod = factors.front();
  Matrix prod_hat = perturbed.front();
  double norm_prod = 1.0;
  double rel_sum = 0.0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i > 0) {
      prod = prod * factors[i];
      prod_hat = prod_hat * perturbed[i];
    }
    const double ni = matrix_norm(factors[i], norm);
    const double di = matrix_norm(perturbed[i] - factors[i], norm);
    if (di > ni) fail(ErrorKind::Precondition, "perturbation of factor " + std::to_string(i) + " exceeds its norm");
    norm_prod *= ni;
    rel_sum += ni > 0.0 ? di / ni : 0.0;
  }
  InequalityCheck c;
  c.lhs = matrix_norm(prod_hat - prod, norm);
  c.rhs = std::ldexp(1.0, static_cast<int>(factors.size()) - 1) * norm_prod * rel_sum;
  return c;
}

}  // namespace hmmreal
