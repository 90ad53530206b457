#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace hmmreal {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** keyed by (seed, stream). Distinct streams are independent for
/// practical purposes, so work can be split by stream (e.g. one per sampled
/// sequence) without depending on the order it is executed in.
///
/// All variates are produced from raw bits here rather than through
/// <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential() { return -std::log(uniform_pos()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double theta = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Flat draw from the probability simplex of dimension n.
  Eigen::VectorXd simplex(Eigen::Index n) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = exponential();
    return x / x.sum();
  }

  /// Uniform direction on the unit sphere in R^n.
  Eigen::VectorXd unit_vector(Eigen::Index n) {
    Eigen::VectorXd x(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) x(i) = normal();
    } while (x.norm() == 0.0);
    return x.normalized();
  }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = normal();
    return x;
  }

  /// Index drawn from a discrete law given by nonnegative weights summing to one.
  template <typename Vec>
  int categorical(const Vec& probs) {
    const double u = uniform();
    double acc = 0.0;
    const auto n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      acc += probs(i);
      if (u < acc) return i;
    }
    // u landed in the rounding slack above the cumulative sum
    for (int i = n - 1; i >= 0; --i)
      if (probs(i) > 0.0) return i;
    return n - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hmmreal
