#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rafm {

// Single precision policy for the whole artifact: 64-bit reals.
using Scalar = double;

// Row-major storage so that flattening and on-disk layout agree.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename ScalarT>
using MatrixX = Eigen::Matrix<ScalarT, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename ScalarT>
using VectorX = Eigen::Matrix<ScalarT, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (empty tensor,
// t outside [0,1], degenerate feature, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered while computing.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Dataset / file contents are missing or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random stream.
//
// mt19937_64 has a fully specified sequence, and all derived draws below use
// explicit arithmetic instead of std:: distributions, so streams are
// reproducible across standard libraries and platforms.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t raw() { return state_(); }

  // Uniform in [0, 1) with 53 random bits.
  Scalar uniform() { return static_cast<Scalar>(state_() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second variate.
  Scalar normal() {
    if (hasCached_) {
      hasCached_ = false;
      return cached_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log finite.
    const Scalar u1 = 1.0 - uniform();
    const Scalar u2 = uniform();
    const Scalar r = std::sqrt(-2.0 * std::log(u1));
    const Scalar a = 2.0 * EIGEN_PI * u2;
    cached_ = r * std::sin(a);
    hasCached_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint64_t integer(std::uint64_t n) {
    if (n == 0) throw DomainError("Rng::integer: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = state_();
    while (x >= limit) x = state_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 state_;
  bool hasCached_ = false;
  Scalar cached_ = 0.0;
};

// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Row-major flatten / unflatten between images and the vectors fed to the
// velocity network.
inline Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != v.size())
    throw DimensionError("unflatten: " + std::to_string(v.size()) + " elements cannot fill " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  Matrix m(rows, cols);
  Eigen::Map<Vector>(m.data(), m.size()) = v;
  return m;
}

}  // namespace rafm
