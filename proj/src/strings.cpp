#include "hmmreal/strings.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hmmreal/error.hpp"

namespace hmmreal {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// rev[L(l_1..l_n)] = L(l_n..l_1)
std::vector<std::int64_t> reversal_map(int d, int n) {
  const std::int64_t p = checked_power(d, n);
  std::vector<std::int64_t> rev(static_cast<std::size_t>(p));
  for (std::int64_t i = 0; i < p; ++i) {
    std::int64_t x = i, r = 0;
    for (int t = 0; t < n; ++t) {
      r = r * d + x % d;
      x /= d;
    }
    rev[static_cast<std::size_t>(i)] = r;
  }
  return rev;
}

void require_window(const JointTable& table, int n) {
  if (n < 1 || table.N != 2 * n + 1)
    fail(ErrorKind::InvalidInput, "window mismatch: table has N = " + std::to_string(table.N) +
                                      ", expected 2n+1 = " + std::to_string(2 * n + 1));
}

}  // namespace

std::int64_t capacity_limit() {
  constexpr std::int64_t kDefault = std::int64_t{1} << 26;
  const char* env = std::getenv("HMMREAL_CAPACITY");
  if (env == nullptr || *env == '\0') return kDefault;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0' || v <= 0)
    fail(ErrorKind::InvalidInput, std::string("HMMREAL_CAPACITY is not a positive integer: ") + env);
  return static_cast<std::int64_t>(v);
}

std::int64_t checked_power(int d, int n) {
  if (d < 1 || n < 0) fail(ErrorKind::InvalidInput, "checked_power: need d >= 1 and n >= 0");
  const std::int64_t limit = capacity_limit();
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) {
    if (p > limit / d)
      fail(ErrorKind::Capacity, "required d^n = " + std::to_string(d) + "^" + std::to_string(n) +
                                    " entries exceeds capacity " + std::to_string(limit));
    p *= d;
  }
  return p;
}

std::int64_t index_of(std::span<const int> letters, int d) {
  std::int64_t idx = 0;
  for (int l : letters) {
    if (l < 0 || l >= d)
      fail(ErrorKind::InvalidInput, "letter " + std::to_string(l) + " outside alphabet of size " +
                                        std::to_string(d));
    idx = idx * d + l;
  }
  return idx;
}

Letters string_of(std::int64_t index, int d, int n) {
  const std::int64_t p = checked_power(d, n);
  if (index < 0 || index >= p)
    fail(ErrorKind::InvalidInput, "string index " + std::to_string(index) + " outside [0, " +
                                      std::to_string(p) + ")");
  Letters s(static_cast<std::size_t>(n));
  for (int t = n - 1; t >= 0; --t) {
    s[static_cast<std::size_t>(t)] = static_cast<int>(index % d);
    index /= d;
  }
  return s;
}

double exact_joint(const QuasiHmm& model, std::span<const int> letters) {
  Vector w = model.v;
  for (int l : letters) {
    if (l < 0 || l >= model.d()) fail(ErrorKind::InvalidInput, "letter outside alphabet");
    w = model.ops[static_cast<std::size_t>(l)] * w;
  }
  return model.u.dot(w);
}

Matrix future_rows(const QuasiHmm& model, int n) {
  const int d = model.d();
  const std::int64_t total = checked_power(d, n);
  (void)total;
  Matrix E = model.u.transpose();
  for (int t = 0; t < n; ++t) {
    // string (j, rest): u^T A_rest... A_j, i.e. the shorter rows times A_j
    Matrix next(E.rows() * d, E.cols());
    for (int j = 0; j < d; ++j)
      next.middleRows(E.rows() * j, E.rows()) = E * model.ops[static_cast<std::size_t>(j)];
    E = std::move(next);
  }
  return E;
}

Matrix past_rows(const QuasiHmm& model, int n) {
  const int d = model.d();
  checked_power(d, n);
  Matrix F = model.v.transpose();
  for (int t = 0; t < n; ++t) {
    Matrix next(F.rows() * d, F.cols());
    for (int j = 0; j < d; ++j)
      next.middleRows(F.rows() * j, F.rows()) = F * model.ops[static_cast<std::size_t>(j)].transpose();
    F = std::move(next);
  }
  return F;
}

Matrix prefix_rows(const QuasiHmm& model, int max_len) {
  std::vector<Matrix> blocks;
  Eigen::Index rows = 0;
  for (int len = 0; len <= max_len; ++len) {
    blocks.push_back(future_rows(model, len));
    rows += blocks.back().rows();
  }
  Matrix out(rows, model.k());
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

Vector string_probabilities(const QuasiHmm& model, int length) {
  return future_rows(model, length) * model.v;
}

JointTable joint_table(const QuasiHmm& model, int N) {
  if (N < 1) fail(ErrorKind::InvalidInput, "joint_table needs N >= 1");
  JointTable t;
  t.d = model.d();
  t.N = N;
  t.values = string_probabilities(model, N);
  t.provenance = Provenance::Exact;
  return t;
}

JointTable marginal(const JointTable& table, int length) {
  if (length < 0 || length > table.N)
    fail(ErrorKind::InvalidInput, "marginal length outside [0, N]");
  const std::int64_t tail = checked_power(table.d, table.N - length);
  const std::int64_t head = checked_power(table.d, length);
  JointTable out = table;
  out.N = length;
  // values index = prefix * tail + suffix, so each prefix owns a contiguous block
  Eigen::Map<const Matrix> blocks(table.values.data(), tail, head);
  out.values = blocks.colwise().sum().transpose();
  return out;
}

JointTable marginalize_last(const JointTable& table) {
  if (table.N < 1) fail(ErrorKind::InvalidInput, "cannot marginalize an empty window");
  return marginal(table, table.N - 1);
}

HankelPair build_hankel(const JointTable& table, int n) {
  require_window(table, n);
  const int d = table.d;
  const std::int64_t p = checked_power(d, n);
  const auto rev = reversal_map(d, n);

  HankelPair h;
  h.d = d;
  h.n = n;
  h.H0.resize(p, p);
  h.slices.assign(static_cast<std::size_t>(d), Matrix(p, p));

  // Length-2n marginal covers times -n..n-1: past block then future block.
  const JointTable head = marginalize_last(table);
  for (std::int64_t a = 0; a < p; ++a) {
    const auto col = rev[static_cast<std::size_t>(a)];
    for (std::int64_t f = 0; f < p; ++f) h.H0(f, col) = head.values(a * p + f);
    for (int j = 0; j < d; ++j)
      for (std::int64_t f = 0; f < p; ++f)
        h.slices[static_cast<std::size_t>(j)](f, col) = table.values((a * d + j) * p + f);
  }
  return h;
}

Matrix Tensor3::contract3(const Vector& w) const {
  const Vector flat = unfolded * w;
  return Eigen::Map<const RowMajor>(flat.data(), n1, n2);
}

Tensor3 cp_tensor(const Matrix& A, const Matrix& B, const Matrix& C) {
  if (A.cols() != B.cols() || A.cols() != C.cols())
    fail(ErrorKind::Structural, "cp_tensor: factor column counts differ");
  Tensor3 X(static_cast<int>(A.rows()), static_cast<int>(B.rows()), static_cast<int>(C.rows()));
  X.unfolded = khatri_rao(A, B) * C.transpose();
  return X;
}

Tensor3 multilinear(const Tensor3& X, const Matrix& V1, const Matrix& V2, const Matrix& V3) {
  if (V1.cols() != X.n1 || V2.cols() != X.n2 || V3.cols() != X.n3)
    fail(ErrorKind::Structural, "multilinear: projection shapes do not match the tensor");
  const Matrix partial = X.unfolded * V3.transpose();
  Tensor3 Y(static_cast<int>(V1.rows()), static_cast<int>(V2.rows()), static_cast<int>(V3.rows()));
  for (Eigen::Index l = 0; l < V3.rows(); ++l) {
    const Matrix slice = Eigen::Map<const RowMajor>(partial.col(l).data(), X.n1, X.n2);
    const RowMajor projected = V1 * slice * V2.transpose();
    Y.unfolded.col(l) = Eigen::Map<const Vector>(projected.data(), projected.size());
  }
  return Y;
}

MomentTensor build_tensor(const JointTable& table, int n) {
  require_window(table, n);
  const int d = table.d;
  const std::int64_t p = checked_power(d, n);
  const auto rev = reversal_map(d, n);

  MomentTensor m;
  m.d = d;
  m.n = n;
  m.M = Tensor3(static_cast<int>(p), static_cast<int>(p), d);
  for (std::int64_t a = 0; a < p; ++a) {
    const int past = static_cast<int>(rev[static_cast<std::size_t>(a)]);
    for (int j = 0; j < d; ++j)
      for (std::int64_t f = 0; f < p; ++f)
        m.M(static_cast<int>(f), past, j) = table.values((a * d + j) * p + f);
  }
  return m;
}

MomentTensor build_tensor(const JointTable& table, int n, const Hmm& truth) {
  MomentTensor m = build_tensor(table, n);
  auto factors = conditional_factors(truth, n);
  const Tensor3 rebuilt = cp_tensor(factors.A, factors.B, factors.C);
  const double err = (rebuilt.unfolded - m.M.unfolded).cwiseAbs().maxCoeff();
  if (err > 1e-10)
    fail(ErrorKind::Numerical, "moment tensor does not match the model factors (max error " +
                                   std::to_string(err) + ")");
  m.factors = std::move(factors);
  return m;
}

ConditionalFactors conditional_factors(const Hmm& model, int n) {
  if (n < 1) fail(ErrorKind::InvalidInput, "conditional_factors needs n >= 1");
  checked_power(model.d(), n);
  const Matrix Qt = backward_transition(model).Qt;
  ConditionalFactors f;
  f.A = Matrix::Ones(1, model.k());
  f.B = Matrix::Ones(1, model.k());
  for (int t = 0; t < n; ++t) {
    f.A = khatri_rao(model.O, f.A) * model.Q;
    f.B = khatri_rao(model.O, f.B) * Qt;
  }
  f.C = model.O * model.pi.asDiagonal();
  return f;
}

Matrix khatri_rao(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) fail(ErrorKind::Structural, "khatri_rao: column counts differ");
  const Eigen::Index p = A.rows(), q = B.rows();
  Matrix X(p * q, A.cols());
  for (Eigen::Index i = 0; i < A.cols(); ++i)
    for (Eigen::Index j1 = 0; j1 < p; ++j1) X.col(i).segment(j1 * q, q) = A(j1, i) * B.col(i);
  return X;
}

namespace {

Vector singular_values(const Matrix& X) {
  if (X.size() == 0) return Vector();
  if (std::min(X.rows(), X.cols()) <= 16) return Eigen::JacobiSVD<Matrix>(X).singularValues();
  return Eigen::BDCSVD<Matrix>(X).singularValues();
}

}  // namespace

RankInfo numeric_rank(const Matrix& X, double rel_tol) {
  RankInfo info;
  info.singular_values = singular_values(X);
  if (info.singular_values.size() == 0 || !(info.singular_values(0) > 0.0)) return info;
  const double cut = rel_tol * info.singular_values(0);
  info.rank = static_cast<int>((info.singular_values.array() > cut).count());
  return info;
}

RankInfo numeric_rank_abs(const Matrix& X, double floor) {
  RankInfo info;
  info.singular_values = singular_values(X);
  info.rank = static_cast<int>((info.singular_values.array() > floor).count());
  return info;
}

int kruskal_rank(const Matrix& X, double tol) {
  const int c = static_cast<int>(X.cols());
  if (c > 20) fail(ErrorKind::Capacity, "kruskal_rank: more than 20 columns");
  const int max_r = static_cast<int>(std::min<Eigen::Index>(c, X.rows()));
  int krank = 0;
  for (int r = 1; r <= max_r; ++r) {
    // every r-subset via bitmasks with popcount r
    for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
      if (__builtin_popcount(mask) != r) continue;
      Matrix sub(X.rows(), r);
      int col = 0;
      for (int i = 0; i < c; ++i)
        if (mask & (1u << i)) sub.col(col++) = X.col(i);
      if (numeric_rank(sub, tol).rank != r) return krank;
    }
    krank = r;
  }
  return krank;
}

}  // namespace hmmreal
