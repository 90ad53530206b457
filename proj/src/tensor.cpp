#include "hmmreal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"

namespace hmmreal {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct RealSpectrum {
  Vector values;
  Matrix vectors;
  double max_imag = 0.0;  // relative to the largest |eigenvalue|
};

RealSpectrum real_eigen(const Matrix& K) {
  Eigen::EigenSolver<Matrix> es(K);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numerical, "eigendecomposition did not converge");
  const auto& ev = es.eigenvalues();
  const auto& vec = es.eigenvectors();
  RealSpectrum out;
  out.values = ev.real();
  out.vectors = vec.real();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  out.max_imag = ev.imag().cwiseAbs().maxCoeff() / scale;
  // eigenvectors of a real eigenvalue may come back with a complex phase
  for (Eigen::Index j = 0; j < vec.cols(); ++j) {
    Eigen::Index idx;
    vec.col(j).cwiseAbs().maxCoeff(&idx);
    const std::complex<double> phase = vec(idx, j) / std::abs(vec(idx, j));
    out.vectors.col(j) = (vec.col(j) / phase).real();
  }
  return out;
}

double min_relative_gap(const Vector& values) {
  const double scale = std::max(values.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    for (Eigen::Index j = i + 1; j < values.size(); ++j)
      gap = std::min(gap, std::abs(values(i) - values(j)) / scale);
  return gap;
}

double reciprocal_condition(const Matrix& X) {
  const Vector s = Eigen::JacobiSVD<Matrix>(X).singularValues();
  return s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
}

}  // namespace

const char* to_string(Backend backend) {
  switch (backend) {
    case Backend::Auto: return "auto";
    case Backend::SimDiag: return "simdiag";
    case Backend::Foobi: return "foobi";
  }
  return "unknown";
}

Backend backend_from_string(const std::string& name) {
  if (name == "auto") return Backend::Auto;
  if (name == "simdiag") return Backend::SimDiag;
  if (name == "foobi") return Backend::Foobi;
  fail(ErrorKind::InvalidInput, "unknown backend '" + name + "'");
}

double cp_residual(const Tensor3& X, const Matrix& A, const Matrix& B, const Matrix& C) {
  return (X.unfolded - khatri_rao(A, B) * C.transpose()).cwiseAbs().maxCoeff();
}

void normalize_factor_columns(Matrix& A, Matrix& B, Matrix& C) {
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    const double sa = A.col(i).sum();
    const double sb = B.col(i).sum();
    if (std::abs(sa) <= 1e-12 * A.col(i).norm() || std::abs(sb) <= 1e-12 * B.col(i).norm() ||
        sa == 0.0 || sb == 0.0)
      fail(ErrorKind::Numerical, "factor column " + std::to_string(i) + " sums to zero");
    A.col(i) /= sa;
    B.col(i) /= sb;
    C.col(i) *= sa * sb;
  }
}

namespace {

// Alternating least squares started from an algebraic estimate. The
// eigenvector step loses digits when a factor is ill conditioned; a few
// sweeps on an exact tensor recover them.
void polish_cp(const Tensor3& X, Matrix& A, Matrix& B, Matrix& C, int sweeps, double target) {
  const Eigen::Index k = A.cols();
  double residual = cp_residual(X, A, B, C);
  for (int sweep = 0; sweep < sweeps && residual > target; ++sweep) {
    Matrix MA(A.rows(), k), MB(B.rows(), k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Matrix S = X.contract3(C.col(r));
      MA.col(r) = S * B.col(r);
    }
    A = (B.transpose() * B).cwiseProduct(C.transpose() * C).ldlt().solve(MA.transpose()).transpose();
    for (Eigen::Index r = 0; r < k; ++r) {
      const Matrix S = X.contract3(C.col(r));
      MB.col(r) = S.transpose() * A.col(r);
    }
    B = (A.transpose() * A).cwiseProduct(C.transpose() * C).ldlt().solve(MB.transpose()).transpose();
    C = khatri_rao(A, B).colPivHouseholderQr().solve(X.unfolded).transpose();
    const double next = cp_residual(X, A, B, C);
    if (!(next < residual)) break;
    residual = next;
  }
}

}  // namespace

CpFactors simdiag_decompose(const Tensor3& X, const SimDiagOptions& opts) {
  if (X.n3 < 2) fail(ErrorKind::InvalidInput, "simdiag needs a third-mode dimension >= 2");

  // Rank-k subspaces of X(I, I, e), where the projected slices are invertible.
  const Matrix summed = X.contract3(Vector::Ones(X.n3));
  Eigen::BDCSVD<Matrix> svd(summed, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0)) fail(ErrorKind::EmptyProcess, "tensor is zero");
  int k = static_cast<int>((s.array() > opts.rank_tol * s(0)).count());
  if (opts.expected_k) {
    // A supplied order may sit below rank_tol, but not at rounding level.
    constexpr double floor = 1e-12;
    if (*opts.expected_k < 1 || *opts.expected_k > s.size() || !(s(*opts.expected_k - 1) > floor * s(0)))
      fail(ErrorKind::Condition, "expected order " + std::to_string(*opts.expected_k) +
                                     " exceeds the rank of X(I, I, e)");
    k = *opts.expected_k;
  }
  const Matrix P = svd.matrixU().leftCols(k);
  const Matrix R = svd.matrixV().leftCols(k);

  const int unfolded_rank = numeric_rank(X.unfolded, opts.rank_tol).rank;
  if (unfolded_rank > k)
    fail(ErrorKind::Condition, "mode-3 matricization has rank " + std::to_string(unfolded_rank) +
                                   " > " + std::to_string(k) +
                                   ": A or B lacks full column rank, use foobi");

  Rng rng(opts.seed);
  std::string last_issue = "no attempt made";
  std::optional<CpFactors> best;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    const Vector v1 = rng.unit_vector(X.n3);
    const Vector v2 = rng.unit_vector(X.n3);
    const Matrix m1 = P.transpose() * X.contract3(v1) * R;
    const Matrix m2 = P.transpose() * X.contract3(v2) * R;
    if (reciprocal_condition(m1) < 1e-12 || reciprocal_condition(m2) < 1e-12) {
      last_issue = "projected slice is singular";
      continue;
    }

    // m1 m2^{-1} = Abar D Abar^{-1};  (m1^{-1} m2)^T = Bbar D^{-1} Bbar^{-1}
    const Matrix K1 = m2.transpose().partialPivLu().solve(m1.transpose()).transpose();
    const Matrix K2 = m1.partialPivLu().solve(m2).transpose();
    const RealSpectrum e1 = real_eigen(K1);
    const RealSpectrum e2 = real_eigen(K2);
    if (e1.max_imag > opts.imag_tol || e2.max_imag > opts.imag_tol)
      fail(ErrorKind::Numerical, "complex eigenvalues in the projected quotient (relative imaginary part " +
                                     fmt(std::max(e1.max_imag, e2.max_imag)) + ")");
    if (min_relative_gap(e1.values) <= opts.pairing_tol) {
      last_issue = "eigenvalue collision";
      continue;
    }

    std::vector<int> pair(static_cast<std::size_t>(k), -1);
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    bool paired = true;
    for (int i = 0; i < k && paired; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int bj = -1;
      for (int j = 0; j < k; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double miss = std::abs(e1.values(i) * e2.values(j) - 1.0);
        if (miss < best) {
          best = miss;
          bj = j;
        }
      }
      if (best > opts.pairing_tol) {
        paired = false;
        break;
      }
      used[static_cast<std::size_t>(bj)] = true;
      pair[static_cast<std::size_t>(i)] = bj;
    }
    if (!paired) {
      last_issue = "reciprocal eigenvalue pairing failed";
      continue;
    }

    CpFactors out;
    out.k = k;
    out.backend = Backend::SimDiag;
    out.attempts = attempt + 1;
    out.A = P * e1.vectors;
    Matrix Bbar(k, k);
    for (int i = 0; i < k; ++i) Bbar.col(i) = e2.vectors.col(pair[static_cast<std::size_t>(i)]);
    out.B = R * Bbar;
    Matrix dummy = Matrix::Ones(1, k);
    normalize_factor_columns(out.A, out.B, dummy);
    out.C = khatri_rao(out.A, out.B).colPivHouseholderQr().solve(X.unfolded).transpose();
    out.residual = cp_residual(X, out.A, out.B, out.C);
    if (out.residual > opts.residual_tol) {
      polish_cp(X, out.A, out.B, out.C, opts.polish_sweeps, 1e-3 * opts.residual_tol);
      normalize_factor_columns(out.A, out.B, out.C);
      out.residual = cp_residual(X, out.A, out.B, out.C);
    }
    if (out.residual <= opts.residual_tol) return out;
    // Close eigenvalues cost accuracy; another random pair may separate them better.
    if (!best || out.residual < best->residual) best = std::move(out);
    last_issue = "reconstruction error " + fmt(best->residual);
  }
  if (best)
    fail(ErrorKind::Condition, "simdiag reconstruction error " + fmt(best->residual) +
                                   " above tolerance after " + std::to_string(opts.retries + 1) +
                                   " attempts; factors are ill conditioned or not full column rank");
  fail(ErrorKind::Degeneracy, "simdiag failed after " + std::to_string(opts.retries + 1) +
                                  " attempts: " + last_issue);
}

RankOneSplit rank_one_kr_factor(const Vector& col, int p, int q) {
  if (col.size() != Eigen::Index(p) * q) fail(ErrorKind::Structural, "rank_one_kr_factor: size mismatch");
  if (col.cwiseAbs().maxCoeff() == 0.0) fail(ErrorKind::Split, "degenerate (zero) Khatri-Rao column");
  const Matrix X = Eigen::Map<const RowMajor>(col.data(), p, q);
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  RankOneSplit out;
  out.a = s(0) * svd.matrixU().col(0);
  out.b = svd.matrixV().col(0);
  Eigen::Index idx;
  out.b.cwiseAbs().maxCoeff(&idx);
  if (out.b(idx) < 0.0) {
    out.a = -out.a;
    out.b = -out.b;
  }
  out.residual = s.size() > 1 ? s(1) / s(0) : 0.0;
  return out;
}

JointDiagResult joint_diagonalize(const std::vector<Matrix>& H, double tol, int max_sweeps,
                                  std::uint64_t seed) {
  if (H.empty()) fail(ErrorKind::InvalidInput, "joint_diagonalize: empty set");
  const Eigen::Index k = H.front().rows();
  JointDiagResult out;
  if (k == 1) {
    out.W = Matrix::Ones(1, 1);
    return out;
  }

  // Start: eigenvectors of Ha Hb^{-1} = W (La Lb^{-1}) W^{-1} for random combinations.
  Rng rng(seed);
  Matrix W0;
  for (int attempt = 0; attempt < 8 && W0.size() == 0; ++attempt) {
    Matrix Ha = Matrix::Zero(k, k), Hb = Matrix::Zero(k, k);
    for (const auto& h : H) {
      Ha += rng.normal() * h;
      Hb += rng.normal() * h;
    }
    if (reciprocal_condition(Hb) < 1e-12) continue;
    const Matrix K = Hb.transpose().partialPivLu().solve(Ha.transpose()).transpose();
    const RealSpectrum spec = real_eigen(K);
    if (spec.max_imag > 1e-8 || min_relative_gap(spec.values) < 1e-10) continue;
    if (reciprocal_condition(spec.vectors) < 1e-12) continue;
    W0 = spec.vectors;
  }
  if (W0.size() == 0) fail(ErrorKind::Degeneracy, "joint diagonalization: no usable generalized eigenbasis");

  const auto lu = W0.partialPivLu();
  std::vector<Matrix> G;
  G.reserve(H.size());
  for (const auto& h : H) {
    const Matrix left = lu.solve(h);                               // W0^{-1} H
    G.push_back(lu.solve(left.transpose()).transpose());           // W0^{-1} H W0^{-T}
  }

  // Orthogonal Jacobi refinement of the nearly diagonal set.
  Matrix V = Matrix::Identity(k, k);
  bool rotated = true;
  int sweep = 0;
  for (; sweep < max_sweeps && rotated; ++sweep) {
    rotated = false;
    for (Eigen::Index p = 0; p < k - 1; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        Eigen::Matrix2d gg = Eigen::Matrix2d::Zero();
        for (const auto& g : G) {
          const Eigen::Vector2d h(g(p, p) - g(q, q), g(p, q) + g(q, p));
          gg += h * h.transpose();
        }
        const double ton = gg(0, 0) - gg(1, 1);
        const double toff = gg(0, 1) + gg(1, 0);
        const double theta = 0.5 * std::atan2(toff, ton + std::sqrt(ton * ton + toff * toff));
        const double c = std::cos(theta), s = std::sin(theta);
        if (std::abs(s) <= tol) continue;
        rotated = true;
        for (auto& g : G) {
          // g <- R^T g R with R = [c -s; s c] on (p, q)
          const Eigen::RowVectorXd rp = g.row(p), rq = g.row(q);
          g.row(p) = c * rp + s * rq;
          g.row(q) = -s * rp + c * rq;
          const Vector cp = g.col(p), cq = g.col(q);
          g.col(p) = c * cp + s * cq;
          g.col(q) = -s * cp + c * cq;
        }
        const Vector vp = V.col(p), vq = V.col(q);
        V.col(p) = c * vp + s * vq;
        V.col(q) = -s * vp + c * vq;
      }
    }
  }
  out.sweeps = sweep;
  out.W = W0 * V;

  double off = 0.0, total = 0.0;
  for (const auto& g : G) {
    total += g.squaredNorm();
    off += g.squaredNorm() - g.diagonal().squaredNorm();
  }
  out.off_diagonal = total > 0.0 ? std::sqrt(std::max(off, 0.0) / total) : 0.0;
  return out;
}

CpFactors foobi_decompose(const Tensor3& X, const FoobiOptions& opts) {
  const int p = X.n1, q = X.n2;
  Eigen::BDCSVD<Matrix> svd(X.unfolded, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0)) fail(ErrorKind::EmptyProcess, "tensor is zero");
  const int k = static_cast<int>((s.array() > opts.rank_tol * s(0)).count());
  if (opts.expected_k && *opts.expected_k != k)
    fail(ErrorKind::Condition, "mode-3 matricization has rank " + std::to_string(k) +
                                   ", expected " + std::to_string(*opts.expected_k));

  // X3 = E F^T with E = U D^{1/2} (pq x k), F = V D^{1/2} (n3 x k).
  const Vector root = s.head(k).cwiseSqrt();
  const Matrix E = svd.matrixU().leftCols(k) * root.asDiagonal();
  const Matrix F = svd.matrixV().leftCols(k) * root.asDiagonal();

  // Rank-one constraint: every 2x2 minor of sum_r w_r E_r vanishes. The minor
  // is antisymmetric in (i1, i2) and in (j1, j2), so i1 < i2, j1 < j2 suffice.
  const std::int64_t rows = std::int64_t(p) * (p - 1) / 2 * (std::int64_t(q) * (q - 1) / 2);
  const int cols = k * (k + 1) / 2;
  if (rows * cols > capacity_limit())
    fail(ErrorKind::Capacity, "foobi constraint system with " + std::to_string(rows) + " x " +
                                  std::to_string(cols) + " entries exceeds capacity");
  auto e = [&](int r, int i, int j) { return E(Eigen::Index(i) * q + j, r); };
  std::vector<std::pair<int, int>> sym_index;
  for (int r = 0; r < k; ++r) sym_index.push_back({r, r});
  for (int r = 0; r < k; ++r)
    for (int t = r + 1; t < k; ++t) sym_index.push_back({r, t});

  Matrix Phi(std::max<std::int64_t>(rows, 1), cols);
  Phi.setZero();
  Eigen::Index row = 0;
  for (int i1 = 0; i1 < p; ++i1)
    for (int i2 = i1 + 1; i2 < p; ++i2)
      for (int j1 = 0; j1 < q; ++j1)
        for (int j2 = j1 + 1; j2 < q; ++j2, ++row)
          for (int c = 0; c < cols; ++c) {
            const auto [r, t] = sym_index[static_cast<std::size_t>(c)];
            const double prs = e(r, i1, j1) * e(t, i2, j2) + e(t, i1, j1) * e(r, i2, j2) -
                               e(r, i1, j2) * e(t, i2, j1) - e(t, i1, j2) * e(r, i2, j1);
            Phi(row, c) = (r == t) ? prs : 2.0 * prs;
          }

  Eigen::JacobiSVD<Matrix> ksvd(Phi, Eigen::ComputeFullV);
  const Vector& ks = ksvd.singularValues();
  const double kthr = opts.kernel_tol * std::max(ks.size() ? ks(0) : 0.0, std::numeric_limits<double>::min());
  const int nonnull = static_cast<int>((ks.array() > kthr).count());
  const int kernel_dim = cols - nonnull;
  if (kernel_dim != k)
    fail(ErrorKind::Condition, "rank-one constraint kernel has dimension " + std::to_string(kernel_dim) +
                                   ", expected " + std::to_string(k));

  std::vector<Matrix> basis;
  for (int b = 0; b < k; ++b) {
    const Vector h = ksvd.matrixV().col(cols - 1 - b);
    Matrix Hm(k, k);
    for (int c = 0; c < cols; ++c) {
      const auto [r, t] = sym_index[static_cast<std::size_t>(c)];
      Hm(r, t) = h(c);
      Hm(t, r) = h(c);
    }
    basis.push_back(std::move(Hm));
  }

  const JointDiagResult jd = joint_diagonalize(basis, opts.jd_tol, opts.jd_max_sweeps, opts.seed);
  if (jd.off_diagonal > opts.jd_accept)
    fail(ErrorKind::Degeneracy, "joint diagonalization residual " + fmt(jd.off_diagonal) + " above tolerance");

  const Matrix KR = E * jd.W;
  const Matrix Cw = jd.W.partialPivLu().solve(F.transpose()).transpose();  // F W^{-T}

  CpFactors out;
  out.k = k;
  out.backend = Backend::Foobi;
  out.A.resize(p, k);
  out.B.resize(q, k);
  out.C = Cw;
  for (int i = 0; i < k; ++i) {
    const RankOneSplit split = rank_one_kr_factor(KR.col(i), p, q);
    if (split.residual > opts.split_tol)
      fail(ErrorKind::Split, "Khatri-Rao column " + std::to_string(i) + " is not rank one (residual " +
                                 fmt(split.residual) + ")");
    out.A.col(i) = split.a;
    out.B.col(i) = split.b;
  }
  normalize_factor_columns(out.A, out.B, out.C);
  out.residual = cp_residual(X, out.A, out.B, out.C);
  if (out.residual > opts.residual_tol)
    fail(ErrorKind::Condition, "foobi reconstruction error " + fmt(out.residual) + " above tolerance");
  return out;
}

}  // namespace hmmreal
