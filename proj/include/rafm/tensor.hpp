#pragma once

// Dense numeric kernel shared by every module: elementwise maps, reductions
// and the matrix product, all over Eigen expressions. Shape mismatches throw
// instead of asserting so the harness can surface them as data errors.

#include "rafm/common.hpp"

#include <string>

namespace rafm {

namespace detail {

template <typename A, typename B>
void requireSameShape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                      const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

template <typename A>
void requireNonEmpty(const Eigen::MatrixBase<A>& a, const char* op) {
  if (a.size() == 0) throw DomainError(std::string(op) + ": empty tensor");
}

}  // namespace detail

template <typename A, typename B>
Matrix matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()));
  return a * b;
}

template <typename A, typename B>
auto add(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::requireSameShape(a, b, "add");
  return (a + b).eval();
}

template <typename A, typename B>
auto sub(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::requireSameShape(a, b, "sub");
  return (a - b).eval();
}

template <typename A, typename B>
auto mul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::requireSameShape(a, b, "mul");
  return a.cwiseProduct(b).eval();
}

template <typename A>
auto scale(const Eigen::MatrixBase<A>& a, Scalar s) {
  return (a * s).eval();
}

// lerp(a, b, t) = (1-t) a + t b.
template <typename A, typename B>
auto lerp(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Scalar t) {
  detail::requireSameShape(a, b, "lerp");
  return ((1.0 - t) * a + t * b).eval();
}

template <typename A>
Scalar sum(const Eigen::MatrixBase<A>& a) {
  detail::requireNonEmpty(a, "sum");
  return a.sum();
}

template <typename A>
Scalar mean(const Eigen::MatrixBase<A>& a) {
  detail::requireNonEmpty(a, "mean");
  return a.mean();
}

template <typename A>
Scalar sqNorm(const Eigen::MatrixBase<A>& a) {
  detail::requireNonEmpty(a, "sqNorm");
  return a.squaredNorm();
}

// Index of the largest element; ties resolve to the lowest index so that
// retrieval stays deterministic. Matrices are scanned in row-major order.
template <typename A>
Eigen::Index maxIndex(const Eigen::MatrixBase<A>& a) {
  detail::requireNonEmpty(a, "maxIndex");
  Eigen::Index best = 0;
  Scalar bestValue = a(0, 0);
  Eigen::Index flat = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c, ++flat) {
      const Scalar v = a(r, c);
      if (v > bestValue) {
        bestValue = v;
        best = flat;
      }
    }
  }
  return best;
}

}  // namespace rafm
