#include "doctest.h"
#include "oracles.hpp"

#include "hmmreal/error.hpp"
#include "hmmreal/quasi.hpp"

using namespace hmmreal;

namespace {

Realization realize_exact(const Hmm& m, int n, const RankRule& rule = {}) {
  return realize_quasi(build_hankel(joint_table(hmm_to_quasi(m), 2 * n + 1), n), rule);
}

}  // namespace

TEST_CASE("i.i.d. process realizes with a single state") {
  const Hmm m = make_hmm(Matrix::Ones(1, 1), Vector::Constant(2, 0.5));
  const Realization r = realize_exact(m, 1);
  CHECK(r.model.k() == 1);
  CHECK(r.diagnostics.detected_rank == 1);
  CHECK(verify_realization(r.model, hmm_to_quasi(m), 6).max_error < 1e-14);
}

TEST_CASE("four states over two letters realize exactly at n = 2") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Hmm m = random_hmm(2, 4, seed);
    const Realization r = realize_exact(m, 2);
    CHECK(r.diagnostics.detected_rank == 4);
    CHECK(r.diagnostics.norm_residual_u < 1e-9);
    CHECK(r.diagnostics.norm_residual_v < 1e-9);
    CHECK(verify_realization(r.model, hmm_to_quasi(m), 7).max_error <= 1e-9);
    // Every string probability is checked against path enumeration too.
    for (std::int64_t i = 0; i < 32; ++i) {
      const Letters s = string_of(i, 2, 5);
      CHECK(predict(r.model, s).value == doctest::Approx(oracle::path_probability(m, s)).epsilon(1e-9));
    }
  }
}

TEST_CASE("realizations at different windows are equivalent") {
  const Hmm m = random_hmm(3, 3, 4);
  const Realization a = realize_exact(m, 1);
  const Realization b = realize_exact(m, 2);
  REQUIRE(a.model.k() == 3);
  REQUIRE(b.model.k() == 3);
  const auto w = quasi_equivalent(a.model, b.model, 5, 1e-10);
  CHECK(w.equivalent);
  CHECK(w.transform.has_value());
}

TEST_CASE("the truncated parity chain mispredicts a long string") {
  const Hmm m = noisy_parity_hmm({});
  const Realization r = realize_exact(m, 1);
  CHECK(r.model.k() < m.k());
  const Vector want = string_probabilities(hmm_to_quasi(m), 7);
  const Vector got = string_probabilities(r.model, 7);
  CHECK((want - got).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("expected order above the numeric rank is a rank deficiency") {
  const Hmm m = random_hmm(2, 4, 1);
  RankRule rule;
  rule.expected_k = 5;
  try {
    realize_exact(m, 1, rule);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficiency);
    CHECK(exit_code(e.kind()) == 2);
  }
}

TEST_CASE("expected order below the numeric rank truncates with a warning") {
  const Hmm m = random_hmm(3, 3, 2);
  RankRule rule;
  rule.expected_k = 2;
  const Realization r = realize_exact(m, 1, rule);
  CHECK(r.model.k() == 2);
  CHECK(r.diagnostics.detected_rank == 3);
  CHECK(r.diagnostics.warnings.size() == 1);
}

TEST_CASE("absolute floor rule") {
  const Hmm m = random_hmm(3, 3, 2);
  RankRule rule;
  rule.abs_floor = 1.0;
  CHECK_THROWS_AS(realize_exact(m, 1, rule), Error);
  rule.abs_floor = 1e-14;
  CHECK(realize_exact(m, 1, rule).model.k() == 3);
}

TEST_CASE("zero Hankel matrix is an empty process") {
  HankelPair h;
  h.d = 2;
  h.n = 1;
  h.H0 = Matrix::Zero(2, 2);
  h.slices.assign(2, Matrix::Zero(2, 2));
  try {
    realize_quasi(h);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyProcess);
  }
}

TEST_CASE("verification against a table and sampled long lengths") {
  const Hmm m = random_hmm(2, 2, 6);
  const QuasiHmm q = hmm_to_quasi(m);
  const Realization r = realize_exact(m, 1);
  const VerifyReport t = verify_realization(r.model, joint_table(q, 3), 10);
  CHECK(t.max_len == 3);
  CHECK(t.strings_checked == 2 + 4 + 8);
  CHECK(t.max_error < 1e-12);
  const VerifyReport s = verify_realization(r.model, q, 6, 16);
  CHECK(s.sampled);
  CHECK(s.max_error < 1e-12);
}

TEST_CASE("negative predictions are flagged") {
  QuasiHmm q;
  q.u = Vector::Ones(1);
  q.v = Vector::Ones(1);
  q.ops = {Matrix::Constant(1, 1, -0.5), Matrix::Constant(1, 1, 1.5)};
  CHECK(predict(q, Letters{0}).negative);
  CHECK_FALSE(predict(q, Letters{0, 0}).negative);
}
