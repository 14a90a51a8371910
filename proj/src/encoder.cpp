#include "rafm/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace rafm {

Scalar cosine(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size())
    throw DimensionError("cosine: feature dimensions disagree");
  return std::clamp(a.values.dot(b.values), -1.0, 1.0);
}

FrozenEncoder::FrozenEncoder(Eigen::Index inputRows, Eigen::Index inputCols, int featureDim,
                             std::uint64_t seed)
    : inputRows_(inputRows), inputCols_(inputCols), featureDim_(featureDim), seed_(seed) {
  if (inputRows <= 0 || inputCols <= 0) throw DomainError("encoder: input shape must be positive");
  if (featureDim <= 0) throw DomainError("encoder: feature dim must be positive");
  pooled_ = inputRows >= 4 && inputCols >= 4 && inputRows % 4 == 0 && inputCols % 4 == 0;
  const Eigen::Index pooledDim = pooled_ ? (inputRows / 4) * (inputCols / 4) : inputRows * inputCols;
  Rng rng(seed);
  const Scalar sigma = std::sqrt(1.0 / static_cast<Scalar>(pooledDim));
  projection_.resize(featureDim, pooledDim);
  for (Eigen::Index r = 0; r < projection_.rows(); ++r)
    for (Eigen::Index c = 0; c < projection_.cols(); ++c) projection_(r, c) = sigma * rng.normal();
}

FeatureVector FrozenEncoder::encode(const Matrix& x) const {
  if (x.rows() != inputRows_ || x.cols() != inputCols_)
    throw DimensionError("encode: input is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", encoder expects " +
                         std::to_string(inputRows_) + "x" + std::to_string(inputCols_));
  if (!x.allFinite()) throw NumericError("encode: non-finite input");
  if (x.norm() == 0.0) throw DomainError("encode: all-zero input cannot be normalized");

  Vector pooledFlat(projection_.cols());
  if (pooled_) {
    const Eigen::Index pr = inputRows_ / 4;
    const Eigen::Index pc = inputCols_ / 4;
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < pr; ++r)
      for (Eigen::Index c = 0; c < pc; ++c, ++k) pooledFlat[k] = x.block(4 * r, 4 * c, 4, 4).mean();
  } else {
    pooledFlat = flatten(x);
  }

  Vector z = projection_ * pooledFlat;
  const Scalar norm = z.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw DomainError("encode: projected feature degenerated to zero");
  return FeatureVector{z / norm};
}

}  // namespace rafm
