#include "rafm/metrics.hpp"

#include "rafm/io.hpp"
#include "rafm/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace rafm {

Scalar mae(const Matrix& pred, const Matrix& ref) {
  detail::requireSameShape(pred, ref, "mae");
  detail::requireNonEmpty(pred, "mae");
  return (pred - ref).cwiseAbs().mean();
}

Scalar psnr(const Matrix& pred, const Matrix& ref, Scalar range) {
  detail::requireSameShape(pred, ref, "psnr");
  detail::requireNonEmpty(pred, "psnr");
  const Scalar mse = (pred - ref).squaredNorm() / static_cast<Scalar>(pred.size());
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(range * range / mse));
}

namespace {

// Summed-area table with a zero top row and left column, so the sum of any
// window is four lookups.
Matrix integralImage(const Matrix& f) {
  Matrix s = Matrix::Zero(f.rows() + 1, f.cols() + 1);
  for (Eigen::Index r = 0; r < f.rows(); ++r)
    for (Eigen::Index c = 0; c < f.cols(); ++c)
      s(r + 1, c + 1) = f(r, c) + s(r, c + 1) + s(r + 1, c) - s(r, c);
  return s;
}

Scalar windowSum(const Matrix& s, Eigen::Index r, Eigen::Index c, int w) {
  return s(r + w, c + w) - s(r, c + w) - s(r + w, c) + s(r, c);
}

}  // namespace

Scalar ssim(const Matrix& pred, const Matrix& ref, int window, Scalar k1, Scalar k2,
            Scalar range) {
  detail::requireSameShape(pred, ref, "ssim");
  if (pred.rows() < window || pred.cols() < window)
    throw DomainError("ssim: image smaller than the " + std::to_string(window) + "x" +
                      std::to_string(window) + " window");
  const Scalar c1 = (k1 * range) * (k1 * range);
  const Scalar c2 = (k2 * range) * (k2 * range);
  const Scalar n = static_cast<Scalar>(window) * window;

  const Matrix sx = integralImage(pred);
  const Matrix sy = integralImage(ref);
  const Matrix sxx = integralImage(pred.cwiseProduct(pred));
  const Matrix syy = integralImage(ref.cwiseProduct(ref));
  const Matrix sxy = integralImage(pred.cwiseProduct(ref));

  Scalar total = 0;
  Eigen::Index count = 0;
  for (Eigen::Index r = 0; r + window <= pred.rows(); ++r) {
    for (Eigen::Index c = 0; c + window <= pred.cols(); ++c, ++count) {
      const Scalar mx = windowSum(sx, r, c, window) / n;
      const Scalar my = windowSum(sy, r, c, window) / n;
      const Scalar vx = windowSum(sxx, r, c, window) / n - mx * mx;
      const Scalar vy = windowSum(syy, r, c, window) / n - my * my;
      const Scalar cov = windowSum(sxy, r, c, window) / n - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<Scalar>(count);
}

Scalar wasserstein1d(std::vector<Scalar> a, std::vector<Scalar> b) {
  if (a.empty() || b.empty()) throw DomainError("wasserstein1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const Scalar na = static_cast<Scalar>(a.size());
  const Scalar nb = static_cast<Scalar>(b.size());

  // Walk the merged quantile breakpoints of the two step inverse CDFs.
  Scalar acc = 0, cum = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Scalar ca = static_cast<Scalar>(i + 1) / na;
    const Scalar cb = static_cast<Scalar>(j + 1) / nb;
    const Scalar next = std::min(ca, cb);
    const Scalar d = a[i] - b[j];
    acc += d * d * (next - cum);
    cum = next;
    if (ca <= next) ++i;
    if (cb <= next) ++j;
  }
  return std::sqrt(std::max(acc, 0.0));
}

Scalar slicedWasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b,
                         int projections, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw DomainError("slicedWasserstein: empty sample set");
  if (projections < 1) throw DomainError("slicedWasserstein: need at least one projection");
  const Eigen::Index dim = a.front().size();
  for (const auto& v : a)
    if (v.size() != dim) throw DimensionError("slicedWasserstein: ragged sample dimensions");
  for (const auto& v : b)
    if (v.size() != dim) throw DimensionError("slicedWasserstein: ragged sample dimensions");

  Rng rng(seed);
  Scalar total = 0;
  std::vector<Scalar> pa(a.size()), pb(b.size());
  for (int p = 0; p < projections; ++p) {
    Vector dir(dim);
    Scalar norm = 0;
    do {
      for (Eigen::Index k = 0; k < dim; ++k) dir[k] = rng.normal();
      norm = dir.norm();
    } while (norm == 0.0);
    dir /= norm;
    for (std::size_t k = 0; k < a.size(); ++k) pa[k] = dir.dot(a[k]);
    for (std::size_t k = 0; k < b.size(); ++k) pb[k] = dir.dot(b[k]);
    total += wasserstein1d(pa, pb);
  }
  return total / static_cast<Scalar>(projections);
}

Scalar structDice(const Matrix& pred, const Matrix& ref, Scalar threshold) {
  detail::requireSameShape(pred, ref, "structDice");
  detail::requireNonEmpty(pred, "structDice");
  Eigen::Index sizeA = 0, sizeB = 0, overlap = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const bool inA = pred(r, c) > threshold;
      const bool inB = ref(r, c) > threshold;
      sizeA += inA;
      sizeB += inB;
      overlap += inA && inB;
    }
  }
  if (sizeA + sizeB == 0) return 1.0;
  return 2.0 * static_cast<Scalar>(overlap) / static_cast<Scalar>(sizeA + sizeB);
}

std::string metricReportCsv(const MetricReport& report) {
  std::string csv = "subject,slices,mae,mae_hu,ssim,psnr,swd,struct_dice\n";
  auto row = [&](const std::string& name, const SubjectMetrics& m) {
    csv += name + "," + std::to_string(m.sliceCount) + "," + formatDouble(m.mae) + "," +
           formatDouble(m.maeHu) + "," + formatDouble(m.ssim) + "," + formatDouble(m.psnr) + "," +
           formatDouble(m.swd) + "," + formatDouble(m.structDice) + "\n";
  };
  for (const SubjectMetrics& m : report.perSubject) row(std::to_string(m.subjectId), m);
  row("aggregate", report.aggregate);
  return csv;
}

}  // namespace rafm
