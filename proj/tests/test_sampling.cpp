#include <cmath>

#include "doctest.h"

#include "hmmreal/error.hpp"
#include "hmmreal/rng.hpp"
#include "hmmreal/sampling.hpp"

using namespace hmmreal;

TEST_CASE("deterministic cyclic emissions give uniform letter counts") {
  const Hmm base = shift_cycle_hmm(3, 3, 0);
  const Hmm m = make_hmm(base.Q, Matrix::Identity(3, 3));
  const SampleBatch b = sample_sequences(m, 4, 10000, 1);
  for (const auto& s : b.sequences) {
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      ++counts[static_cast<std::size_t>(s[i])];
      if (i > 0) CHECK(s[i] == (s[i - 1] + 2) % 3);
    }
    const double bound = 3.0 * hoeffding_deviation(10000, 3, 0.01);
    for (int c : counts) CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) <= bound);
  }
}

TEST_CASE("a single state emits i.i.d. letters") {
  Matrix O(2, 1);
  O << 0.25, 0.75;
  const Hmm m = make_hmm(Matrix::Ones(1, 1), O);
  const SampleBatch b = sample_sequences(m, 1, 200000, 3);
  double ones = 0;
  for (int l : b.sequences[0]) ones += l;
  CHECK(ones / 200000.0 == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("sampling is reproducible and keyed by sequence") {
  const Hmm m = random_hmm(3, 2, 0);
  const SampleBatch a = sample_sequences(m, 50, 8, 9);
  const SampleBatch b = sample_sequences(m, 50, 8, 9);
  CHECK(a.sequences == b.sequences);
  // A longer batch extends a shorter one with the same keys.
  const SampleBatch c = sample_sequences(m, 60, 8, 9);
  CHECK(std::equal(a.sequences.begin(), a.sequences.end(), c.sequences.begin()));
  CHECK(sample_sequences(m, 50, 8, 10).sequences != a.sequences);
  CHECK_THROWS_AS(sample_sequences(m, 1, 0, 0), Error);
}

TEST_CASE("one sequence gives a one-hot table") {
  const SampleBatch b = sample_sequences(random_hmm(2, 2, 1), 1, 4, 0);
  const JointTable t = empirical_joint(b, 3);
  CHECK(t.values.sum() == 1.0);
  CHECK(t.values.maxCoeff() == 1.0);
  CHECK(t.provenance == Provenance::Empirical);
  CHECK(t.samples == 1);
  CHECK(t.at(std::span(b.sequences[0]).first(3)) == 1.0);
  CHECK_THROWS_AS(empirical_joint(b, 5), Error);
}

TEST_CASE("empirical tables marginalize by counting") {
  const SampleBatch b = sample_sequences(random_hmm(3, 2, 2), 500, 5, 4);
  const JointTable t5 = empirical_joint(b, 5);
  const JointTable t3 = empirical_joint(b, 3);
  CHECK((marginal(t5, 3).values - t3.values).cwiseAbs().maxCoeff() < 1e-15);
  const JointTable w = empirical_joint_windowed(b, 3);
  CHECK(w.samples == 500 * 3);
  CHECK(w.values.sum() == doctest::Approx(1.0));
}

TEST_CASE("empirical tables concentrate at the Hoeffding rate") {
  const Hmm m = random_hmm(2, 2, 5);
  const JointTable exact = joint_table(hmm_to_quasi(m), 3);
  const double bound = 3.0 * std::sqrt(std::log(2.0 * 8 * 1e3) / (2.0 * 1e5));
  int within = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const JointTable t = empirical_joint(sample_sequences(m, 100000, 3, seed), 3);
    within += (t.values - exact.values).cwiseAbs().maxCoeff() <= bound;
  }
  CHECK(within == 10);
}

TEST_CASE("large samples reproduce the exact realization") {
  const Hmm m = random_hmm(2, 2, 3);
  EstimateOptions opts;
  opts.expected_k = 2;
  const Estimate e = estimate_and_realize(sample_sequences(m, 1000000, 5, 0), 2, opts);
  CHECK(e.realization.model.k() == 2);
  const QuasiHmm q = hmm_to_quasi(m);
  for (int len = 1; len <= 5; ++len)
    CHECK((string_probabilities(e.realization.model, len) - string_probabilities(q, len)).cwiseAbs().maxCoeff() <
          1e-3);
  CHECK(e.sample_size_surrogate > 0.0);
  CHECK(e.realization.diagnostics.verify_error < 1e-3);
}

TEST_CASE("expected order overrides a noise-inflated rank") {
  const Hmm m = random_hmm(2, 2, 3);
  const SampleBatch b = sample_sequences(m, 2000, 5, 1);
  EstimateOptions loose;
  loose.rel_tol = 1e-12;
  CHECK(estimate_and_realize(b, 2, loose).realization.diagnostics.detected_rank > 2);
  EstimateOptions pinned;
  pinned.expected_k = 2;
  CHECK(estimate_and_realize(b, 2, pinned).realization.model.k() == 2);
  CHECK_THROWS_AS(estimate_and_realize(b, 3, pinned), Error);
}

TEST_CASE("aligned error vanishes for a change of basis") {
  const QuasiHmm a = hmm_to_quasi(random_hmm(3, 3, 1));
  Matrix T(3, 3);
  T << 1, 0.5, 0, 0, 2, 0, 0.3, 0, 1;
  const Matrix Ti = T.inverse();
  QuasiHmm b;
  b.u = T.transpose() * a.u;
  b.v = Ti * a.v;
  for (const auto& A : a.ops) b.ops.push_back(Ti * A * T);
  CHECK(aligned_parameter_error(b, a, 2).max() < 1e-10);
  b.v(0) += 0.01;
  CHECK(aligned_parameter_error(b, a, 2).err_v == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("Mirsky examples") {
  const Matrix I = Matrix::Identity(3, 3);
  const auto same = mirsky_check(I, I);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  Matrix P = I;
  P(0, 0) += 0.1;
  const auto aligned = mirsky_check(P, I);
  CHECK(aligned.lhs == doctest::Approx(0.1));
  CHECK(aligned.rhs == doctest::Approx(0.1));
  Rng rng(3);
  for (int t = 0; t < 200; ++t) CHECK(mirsky_check(rng.gaussian(6, 4), rng.gaussian(6, 4)).holds());
}

TEST_CASE("Wedin corollary") {
  Rng rng(5);
  const Matrix X = rng.gaussian(6, 3) * rng.gaussian(3, 5);
  const auto zero = wedin_check(X, Matrix::Zero(6, 5), 3);
  CHECK(zero.left_deviation < 1e-12);
  CHECK(zero.right_deviation < 1e-12);
  const Matrix E = 1e-4 * rng.gaussian(6, 5);
  const auto w = wedin_check(X, E, 3);
  CHECK(w.left_deviation <= w.bound);
  CHECK(w.right_deviation <= w.bound);
  try {
    wedin_check(X, 100.0 * Matrix::Identity(6, 5), 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  try {
    wedin_check(rng.gaussian(6, 5), E, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("product perturbation") {
  Rng rng(7);
  const Matrix A = rng.gaussian(4, 4);
  const Matrix Ah = A + 0.01 * rng.gaussian(4, 4);
  const auto one = product_perturbation_check({A}, {Ah}, MatrixNorm::Spectral);
  CHECK(one.lhs == doctest::Approx(one.rhs));
  const auto none = product_perturbation_check({A, A}, {A, A}, MatrixNorm::Frobenius);
  CHECK(none.lhs == 0.0);
  CHECK(none.rhs == 0.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<Matrix> f, g;
    for (int i = 0; i < 3; ++i) {
      f.push_back(rng.gaussian(4, 4));
      g.push_back(f.back() + 0.01 * matrix_norm(f.back(), MatrixNorm::Spectral) * rng.unit_vector(4) *
                                 rng.unit_vector(4).transpose());
    }
    CHECK(product_perturbation_check(f, g, MatrixNorm::Spectral).holds());
  }
  CHECK_THROWS_AS(product_perturbation_check({A}, {A * 3.0}, MatrixNorm::Spectral), Error);
}
