#pragma once

// Image-quality and distribution metrics: MAE (with an HU-like rescale),
// PSNR, SSIM with a uniform window, sliced Wasserstein distance, and a
// threshold-mask Dice score.

#include "rafm/common.hpp"

#include <string>
#include <vector>

namespace rafm {

// Normalized [-1,1] intensities map onto the HU window [-1024, 2000].
inline constexpr Scalar kHuPerUnit = (2000.0 + 1024.0) / 2.0;

Scalar mae(const Matrix& pred, const Matrix& ref);

// 10 log10(range^2 / MSE), capped at 99 dB (identical images hit the cap).
Scalar psnr(const Matrix& pred, const Matrix& ref, Scalar range = 2.0);

// Mean of the local SSIM map over all fully-valid uniform windows; biased
// (moment) estimates of the local variances and covariance.
Scalar ssim(const Matrix& pred, const Matrix& ref, int window = 7, Scalar k1 = 0.01,
            Scalar k2 = 0.03, Scalar range = 2.0);

// Exact 2-Wasserstein distance between two 1D empirical distributions
// (step-function inverse CDFs; sizes may differ).
Scalar wasserstein1d(std::vector<Scalar> a, std::vector<Scalar> b);

// Mean over seeded random unit projections of the 1D 2-Wasserstein distance
// between the projected sample sets.
Scalar slicedWasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b,
                         int projections = 128, std::uint64_t seed = 0);

// Dice overlap of the foreground masks {pixel > threshold}; two empty masks
// count as a perfect match.
Scalar structDice(const Matrix& pred, const Matrix& ref, Scalar threshold = 0.0);

struct SubjectMetrics {
  int subjectId = -1;
  int sliceCount = 0;
  Scalar mae = 0, maeHu = 0, ssim = 0, psnr = 0, swd = 0, structDice = 0;
};

struct MetricReport {
  SubjectMetrics aggregate;               // subjectId -1; mean of per-subject means,
                                          // except swd which pools all slices
  std::vector<SubjectMetrics> perSubject;
};

// One row per subject plus a final aggregate row.
std::string metricReportCsv(const MetricReport& report);

}  // namespace rafm
