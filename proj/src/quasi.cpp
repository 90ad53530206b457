#include "hmmreal/quasi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"

namespace hmmreal {

Realization realize_quasi(const HankelPair& hankel, const RankRule& rule) {
  const Matrix& H0 = hankel.H0;
  if (H0.rows() == 0 || static_cast<int>(hankel.slices.size()) != hankel.d)
    fail(ErrorKind::Structural, "realize_quasi: malformed Hankel pair");

  Eigen::BDCSVD<Matrix> svd(H0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();

  Realization out;
  auto& diag = out.diagnostics;
  diag.singular_values = s;
  if (!(s(0) > 0.0)) fail(ErrorKind::EmptyProcess, "H0 is zero");
  if (rule.abs_floor)
    diag.detected_rank = static_cast<int>((s.array() > *rule.abs_floor).count());
  else
    diag.detected_rank = static_cast<int>((s.array() > rule.rel_tol * s(0)).count());

  int k = diag.detected_rank;
  if (rule.expected_k) {
    if (*rule.expected_k > diag.detected_rank)
      fail(ErrorKind::RankDeficiency,
           "expected order " + std::to_string(*rule.expected_k) + " exceeds the numeric rank " +
               std::to_string(diag.detected_rank) + " of H0; the window is too small");
    if (*rule.expected_k != diag.detected_rank)
      diag.warnings.push_back("numeric rank " + std::to_string(diag.detected_rank) +
                              " truncated to expected order " + std::to_string(*rule.expected_k));
    k = *rule.expected_k;
  }
  if (k == 0) fail(ErrorKind::EmptyProcess, "H0 has numeric rank 0");
  diag.used_rank = k;
  diag.sigma_k = s(k - 1);

  const Vector root = s.head(k).cwiseSqrt();
  const Vector inv_root = root.cwiseInverse();
  const Matrix Uh = svd.matrixU().leftCols(k);
  const Matrix Vh = svd.matrixV().leftCols(k);

  // U = Uh D^{1/2}, V = Vh D^{1/2}; the pseudo-inverses are D^{-1/2} Uh^T and
  // D^{-1/2} Vh^T since Uh, Vh have orthonormal columns.
  QuasiHmm& q = out.model;
  q.u = root.asDiagonal() * Uh.colwise().sum().transpose();
  q.v = root.asDiagonal() * Vh.colwise().sum().transpose();
  q.ops.reserve(hankel.slices.size());
  for (const auto& Hj : hankel.slices)
    q.ops.push_back(inv_root.asDiagonal() * (Uh.transpose() * Hj * Vh) * inv_root.asDiagonal());

  std::tie(diag.norm_residual_u, diag.norm_residual_v) = normalization_residuals(q);
  return out;
}

Prediction predict(const QuasiHmm& model, std::span<const int> letters) {
  Prediction p;
  p.value = exact_joint(model, letters);
  p.negative = p.value < 0.0;
  return p;
}

std::pair<double, double> normalization_residuals(const QuasiHmm& model) {
  Matrix S = Matrix::Zero(model.k(), model.k());
  for (const auto& A : model.ops) S += A;
  const double ru = (S.transpose() * model.u - model.u).cwiseAbs().maxCoeff();
  const double rv = (S * model.v - model.v).cwiseAbs().maxCoeff();
  return {ru, rv};
}

VerifyReport verify_realization(const QuasiHmm& model, const QuasiHmm& reference, int max_len,
                                std::int64_t enumeration_limit, std::uint64_t seed) {
  if (model.d() != reference.d())
    fail(ErrorKind::Structural, "verify_realization: alphabet sizes differ");
  constexpr std::int64_t kSampleSize = 100000;
  const int d = model.d();

  VerifyReport r;
  r.max_len = max_len;
  r.max_error = std::abs(model.u.dot(model.v) - reference.u.dot(reference.v));
  r.strings_checked = 1;

  std::int64_t count = 1;
  for (int len = 1; len <= max_len; ++len) {
    const bool enumerate = count <= enumeration_limit / d;
    count = enumerate ? count * d : count;
    if (enumerate) {
      const Vector a = string_probabilities(model, len);
      const Vector b = string_probabilities(reference, len);
      r.max_error = std::max(r.max_error, (a - b).cwiseAbs().maxCoeff());
      r.strings_checked += a.size();
      continue;
    }
    r.sampled = true;
    Rng rng(seed, static_cast<std::uint64_t>(len));
    Letters s(static_cast<std::size_t>(len));
    for (std::int64_t i = 0; i < kSampleSize; ++i) {
      for (auto& l : s) l = static_cast<int>(rng.next() % static_cast<std::uint64_t>(d));
      r.max_error = std::max(r.max_error, std::abs(exact_joint(model, s) - exact_joint(reference, s)));
    }
    r.strings_checked += kSampleSize;
  }
  return r;
}

VerifyReport verify_realization(const QuasiHmm& model, const JointTable& reference, int max_len) {
  if (model.d() != reference.d)
    fail(ErrorKind::Structural, "verify_realization: alphabet sizes differ");
  VerifyReport r;
  r.max_len = std::min(max_len, reference.N);
  for (int len = 1; len <= r.max_len; ++len) {
    const JointTable ref = marginal(reference, len);
    const Vector a = string_probabilities(model, len);
    r.max_error = std::max(r.max_error, (a - ref.values).cwiseAbs().maxCoeff());
    r.strings_checked += a.size();
  }
  return r;
}

}  // namespace hmmreal
