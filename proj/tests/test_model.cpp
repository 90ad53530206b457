#include "doctest.h"
#include "oracles.hpp"

#include "hmmreal/error.hpp"
#include "hmmreal/model.hpp"
#include "hmmreal/strings.hpp"

using namespace hmmreal;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) X(i, j++) = v;
    ++i;
  }
  return X;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Structural;
}

}  // namespace

TEST_CASE("single-state model validates with pi = 1") {
  const Hmm m = make_hmm(mat({{1.0}}), mat({{0.3}, {0.7}}));
  CHECK(validate_hmm(m).empty());
  CHECK(m.pi(0) == doctest::Approx(1.0));
}

TEST_CASE("a column summing to 0.9 is reported") {
  Hmm m;
  m.Q = mat({{0.5, 0.5}, {0.5, 0.5}});
  m.O = mat({{0.4, 0.5}, {0.5, 0.5}});
  const auto issues = validate_hmm(m);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].invariant == "O column-stochastic");
  CHECK(kind_of([&] { make_hmm(m.Q, m.O); }) == ErrorKind::InvalidInput);
}

TEST_CASE("stationary law of a two-state chain") {
  const Vector pi = stationary_distribution(mat({{0.9, 0.2}, {0.1, 0.8}}));
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identity transition has no unique stationary law") {
  CHECK(kind_of([] { stationary_distribution(Matrix::Identity(2, 2)); }) == ErrorKind::Degeneracy);
}

TEST_CASE("absorbing chain yields zero stationary mass") {
  CHECK(kind_of([] { stationary_distribution(mat({{1.0, 0.5}, {0.0, 0.5}})); }) == ErrorKind::Positivity);
}

TEST_CASE("shift cycle: uniform pi and reversed chain is the transpose") {
  const Hmm m = shift_cycle_hmm(3, 5, 7);
  CHECK((m.pi.array() - 0.2).abs().maxCoeff() < 1e-12);
  const Matrix Qt = backward_transition(m).Qt;
  CHECK((Qt - m.Q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward transition is column stochastic and reverses pi") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Hmm m = random_hmm(3, 4, seed);
    const Matrix Qt = backward_transition(m).Qt;
    CHECK((Qt.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((Qt * m.pi - m.pi).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hmm_to_quasi on a single state gives the emission weights") {
  const Hmm m = make_hmm(mat({{1.0}}), mat({{0.3}, {0.7}}));
  const QuasiHmm q = hmm_to_quasi(m);
  CHECK(q.ops[0](0, 0) == doctest::Approx(0.3));
  CHECK(q.ops[1](0, 0) == doctest::Approx(0.7));
  CHECK(q.u(0) == 1.0);
}

TEST_CASE("hmm_to_quasi with O = I keeps only one column of Q") {
  const Hmm base = random_hmm(3, 3, 4);
  const Hmm m = make_hmm(base.Q, Matrix::Identity(3, 3));
  const QuasiHmm q = hmm_to_quasi(m);
  for (int j = 0; j < 3; ++j) {
    Matrix expect = Matrix::Zero(3, 3);
    expect.col(j) = m.Q.col(j);
    CHECK((q.ops[static_cast<std::size_t>(j)] - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("operator probabilities agree with path enumeration") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Hmm m = random_hmm(2 + static_cast<int>(seed % 2), 1 + static_cast<int>(seed % 3), seed);
    const QuasiHmm q = hmm_to_quasi(m);
    for (int len = 1; len <= 4; ++len) {
      const Vector p = string_probabilities(q, len);
      for (Eigen::Index i = 0; i < p.size(); ++i)
        CHECK(p(i) == doctest::Approx(oracle::path_probability(m, string_of(i, m.d(), len))).epsilon(1e-12));
    }
  }
}

TEST_CASE("random emissions have full column rank when d >= k") {
  int full = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    full += numeric_rank(random_hmm(8, 4, seed).O).rank == 4;
  CHECK(full == 100);
}

TEST_CASE("random models are valid and deterministic") {
  const Hmm a = random_hmm(4, 8, 11);
  const Hmm b = random_hmm(4, 8, 11);
  CHECK(validate_hmm(a).empty());
  CHECK(a.Q == b.Q);
  CHECK(a.O == b.O);
  CHECK(random_hmm(4, 8, 12).Q != a.Q);
}

TEST_CASE("low-rank transitions") {
  const Hmm m = low_rank_hmm(4, 3, 2, 0);
  CHECK(numeric_rank(m.Q).rank == 2);
  CHECK(numeric_rank(m.O).rank == 3);
  CHECK(validate_hmm(m).empty());

  SUBCASE("rank one makes every column the stationary law") {
    const Hmm r1 = low_rank_hmm(5, 4, 1, 3);
    for (int i = 0; i < 4; ++i) CHECK((r1.Q.col(i) - r1.pi).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("r = k falls back to the generic draw") {
    CHECK(low_rank_hmm(4, 3, 3, 5).Q == random_hmm(4, 3, 5).Q);
  }
  SUBCASE("bad ranks are rejected") {
    CHECK(kind_of([] { low_rank_hmm(2, 3, 2, 0); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { low_rank_hmm(4, 3, 0, 0); }) == ErrorKind::InvalidInput);
  }
}

TEST_CASE("noisy parity without noise reveals the parity") {
  NoisyParityParams p;
  p.stages = 3;
  p.corrupted = 2;
  p.flip = 0.0;
  const Hmm m = noisy_parity_hmm(p);
  CHECK(validate_hmm(m).empty());
  // Stages 1 and 2 carry parity 0 and a bit, stage 3 a parity, plus the reset.
  CHECK(m.k() == 2 + 2 + 2 + 1);
  // States are numbered stage-major, so the stage-3 pair sits at 4 and 5.
  CHECK(m.O(0, 4) == 1.0);
  CHECK(m.O(1, 5) == 1.0);
  // The skipped update into stage 2 leaves the revealed parity equal to the stage-2 bit.
  CHECK(m.Q(4, 2) == 1.0);
  CHECK(m.Q(5, 3) == 1.0);
  // Stage 3 always hands over to the reset state, which is numbered last.
  CHECK(m.Q(6, 4) == 1.0);
  CHECK(m.Q(6, 5) == 1.0);
}

TEST_CASE("noisy parity default size and parameter checks") {
  const Hmm m = noisy_parity_hmm({});
  CHECK(m.k() == 17);
  CHECK(validate_hmm(m).empty());
  NoisyParityParams bad;
  bad.corrupted = 1;
  CHECK(kind_of([&] { noisy_parity_hmm(bad); }) == ErrorKind::InvalidInput);
  bad = {};
  bad.reset_stay = 1.0;
  CHECK(kind_of([&] { noisy_parity_hmm(bad); }) == ErrorKind::InvalidInput);
}

TEST_CASE("permuted models are equivalent; others are not") {
  const Hmm m = random_hmm(3, 4, 9);
  const Hmm p = permute_states(m, {2, 0, 3, 1});
  const auto w = hmm_equivalent_up_to_permutation(m, p, 1e-12);
  CHECK(w.equivalent);
  CHECK(w.permutation == std::vector<int>{1, 3, 0, 2});
  CHECK_FALSE(hmm_equivalent_up_to_permutation(m, random_hmm(3, 4, 10), 1e-6).equivalent);
}

TEST_CASE("quasi equivalence under a change of basis") {
  const Hmm m = random_hmm(3, 3, 2);
  const QuasiHmm a = hmm_to_quasi(m);
  Matrix T = Matrix::Identity(3, 3);
  T(0, 1) = 0.7;
  T(2, 0) = -0.4;
  const Matrix Ti = T.inverse();
  QuasiHmm b;
  b.u = T.transpose() * a.u;
  b.v = Ti * a.v;
  for (const auto& A : a.ops) b.ops.push_back(Ti * A * T);
  const auto w = quasi_equivalent(a, b, 4, 1e-12);
  CHECK(w.equivalent);
  REQUIRE(w.transform.has_value());
  CHECK((*w.transform - T).cwiseAbs().maxCoeff() < 1e-9);
}
