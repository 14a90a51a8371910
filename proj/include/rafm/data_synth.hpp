#pragma once

// Procedural phantom dataset with paired-by-construction clean/degraded
// slices, subject-level splits, and the 2D point-cloud toy task.

#include "rafm/common.hpp"
#include "rafm/coupling.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace rafm {

struct DatasetConfig {
  int subjects = 46;          // 7:1:2 split leaves 16+16 training subjects
  int slicesPerSubject = 8;
  int imageH = 16;
  int imageW = 16;
  int anatomyClasses = 4;
  Scalar bias = 0.25;          // global intensity shift of the degraded domain
  Scalar streakAmplitude = 0.3;
  Scalar noiseSigma = 0.05;
  Scalar jitterSigma = 0.02;   // per-slice center jitter, fraction of image width
};

struct Ellipse {
  Scalar cx = 0, cy = 0;   // center, normalized [-1,1] coordinates
  Scalar ax = 0, ay = 0;   // half axes
  Scalar angle = 0;        // radians
  Scalar intensity = 0;    // painted value (overwrites earlier ellipses)
};

struct Subject {
  int id = -1;
  int anatomyClass = 0;
  std::vector<Ellipse> ellipses;  // class template after per-subject perturbation
};

struct PhantomSlice {
  int subjectId = -1;
  int sliceId = -1;
  int anatomyClass = 0;
  Matrix clean;     // CT analogue, intensities in [-1,1]
  Matrix degraded;  // CBCT analogue: clean + bias + streaks + noise, clipped
};

struct DatasetSplit {
  std::vector<int> trainCbct, trainCt, validation, test;  // disjoint subject ids
};

struct Dataset {
  DatasetConfig config;
  std::uint64_t seed = 0;
  std::array<Scalar, 3> streakPhases{};  // fixed per dataset
  std::vector<Subject> subjects;
  std::vector<PhantomSlice> slices;  // subject-major, slice order
  DatasetSplit split;
};

// Pure given the seed; every slice satisfies the foreground-fraction
// invariant (clean > 0 on 10..70% of pixels) or generation fails with the
// retry count in the message.
Dataset generateDataset(const DatasetConfig& cfg, std::uint64_t seed);

// 7:1:2 subject split with the training share divided into two disjoint
// groups. Requires at least 10 subjects.
DatasetSplit splitSubjects(const std::vector<int>& subjectIds, std::uint64_t seed);

// Building blocks, exposed for direct checks of the generation pipeline.
std::vector<Ellipse> anatomyClassTemplate(int anatomyClass);
Matrix renderEllipses(std::span<const Ellipse> ellipses, int rows, int cols, Scalar background);
Scalar streakValue(const DatasetConfig& cfg, const std::array<Scalar, 3>& phases, int col);
Matrix degradeSlice(const Matrix& clean, const DatasetConfig& cfg,
                    const std::array<Scalar, 3>& phases, Rng& noiseRng);

// Domain views used by the training loop: CBCT samples carry the degraded
// slice, CT samples the clean slice.
std::vector<DomainSample> cbctSamples(const Dataset& data, std::span<const int> subjectIds);
std::vector<DomainSample> ctSamples(const Dataset& data, std::span<const int> subjectIds);

// ---------------------------------------------------------------------------
// On-disk layout: <dir>/index.txt (key-value text) plus one raw tensor file
// per slice and domain under <dir>/slices/ (see io.hpp for the byte format).
// ---------------------------------------------------------------------------

void saveDataset(const Dataset& data, const std::filesystem::path& dir);
Dataset loadDataset(const std::filesystem::path& dir);

// FNV-1a over the index and every slice file, in sorted path order.
std::uint64_t datasetHash(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// 2D point-cloud sanity tier: two moons mapped to shifted/rotated two moons.
// ---------------------------------------------------------------------------

struct PointcloudConfig {
  int samplesPerDomain = 512;
  Scalar noiseSigma = 0.05;
  Scalar offsetX = 0, offsetY = 0;
  Scalar rotation = 0;  // radians, about the origin
};

struct PointcloudTask {
  std::vector<Vector> source, target;       // 2D points
  std::vector<int> sourceLabels, targetLabels;  // moon index, for retrieval sanity
};

PointcloudTask generatePointcloudTask(const PointcloudConfig& cfg, std::uint64_t seed);

}  // namespace rafm
