#pragma once

// Frozen slice encoder: 4x4 patch-mean pooling (for image inputs), a seeded
// Gaussian random projection drawn once at construction, then L2
// normalization. No parameter is ever updated by training.

#include "rafm/common.hpp"

namespace rafm {

struct FeatureVector {
  Vector values;  // unit L2 norm
};

// Cosine similarity of two unit-norm features, clamped to [-1, 1].
Scalar cosine(const FeatureVector& a, const FeatureVector& b);

class FrozenEncoder {
 public:
  // Accepts inputs of exactly inputRows x inputCols. Pooling applies when
  // both dimensions are multiples of 4 and at least 4; smaller inputs
  // (e.g. 2D points) are projected directly.
  FrozenEncoder(Eigen::Index inputRows, Eigen::Index inputCols, int featureDim,
                std::uint64_t seed);

  FeatureVector encode(const Matrix& x) const;

  int featureDim() const { return featureDim_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::Index pooledDim() const { return projection_.cols(); }

 private:
  Eigen::Index inputRows_, inputCols_;
  int featureDim_;
  std::uint64_t seed_;
  bool pooled_;
  Matrix projection_;  // featureDim x pooledDim, entries ~ N(0, 1/pooledDim)
};

}  // namespace rafm
