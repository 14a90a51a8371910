#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rafm/data_synth.hpp"
#include "rafm/io.hpp"
#include "rafm/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <set>

using namespace rafm;

namespace {

DatasetConfig tinyConfig() {
  DatasetConfig cfg;
  cfg.subjects = 12;
  cfg.slicesPerSubject = 2;
  return cfg;
}

bool slicesEqual(const Dataset& a, const Dataset& b) {
  if (a.slices.size() != b.slices.size()) return false;
  for (std::size_t i = 0; i < a.slices.size(); ++i)
    if (a.slices[i].clean != b.slices[i].clean || a.slices[i].degraded != b.slices[i].degraded)
      return false;
  return true;
}

}  // namespace

TEST_CASE("generation is deterministic given the seed") {
  const DatasetConfig cfg = tinyConfig();
  const Dataset a = generateDataset(cfg, 5);
  const Dataset b = generateDataset(cfg, 5);
  CHECK(slicesEqual(a, b));
  const Dataset c = generateDataset(cfg, 6);
  CHECK_FALSE(slicesEqual(a, c));
}

TEST_CASE("disabling the degradation makes degraded equal clean") {
  DatasetConfig cfg = tinyConfig();
  cfg.bias = 0.0;
  cfg.streakAmplitude = 0.0;
  cfg.noiseSigma = 0.0;
  const Dataset data = generateDataset(cfg, 5);
  for (const PhantomSlice& s : data.slices) CHECK(s.degraded == s.clean);
}

TEST_CASE("deterministic degradation components match a scalar recomputation") {
  // With sigma=0 the pipeline is bias + streak + clip; rebuild it per pixel.
  DatasetConfig cfg = tinyConfig();
  cfg.noiseSigma = 0.0;
  const Dataset data = generateDataset(cfg, 21);
  for (const PhantomSlice& s : data.slices) {
    for (int r = 0; r < cfg.imageH; ++r) {
      for (int c = 0; c < cfg.imageW; ++c) {
        double streak = 0;
        const int cycles[3] = {2, 5, 9};
        for (int k = 0; k < 3; ++k)
          streak += std::sin(2.0 * EIGEN_PI * cycles[k] * (c + 0.5) / cfg.imageW +
                             data.streakPhases[static_cast<std::size_t>(k)]);
        streak *= cfg.streakAmplitude / 3.0;
        const double expected = std::clamp(s.clean(r, c) + cfg.bias + streak, -1.0, 1.0);
        REQUIRE(std::abs(s.degraded(r, c) - expected) <= 1e-12);
      }
    }
  }
}

TEST_CASE("degradation moves the image and noise behaves like its sigma") {
  const DatasetConfig cfg;
  const Dataset data = generateDataset(cfg, 9);
  double total = 0;
  for (const PhantomSlice& s : data.slices) total += mae(s.degraded, s.clean);
  total /= static_cast<double>(data.slices.size());
  CHECK(total > 0.05);

  // Unclipped residual minus bias+streak should be close to N(0, sigma).
  double sq = 0;
  long count = 0;
  for (const PhantomSlice& s : data.slices) {
    for (int r = 0; r < cfg.imageH; ++r) {
      for (int c = 0; c < cfg.imageW; ++c) {
        if (s.degraded(r, c) <= -1.0 || s.degraded(r, c) >= 1.0) continue;
        const double residual = s.degraded(r, c) - s.clean(r, c) - cfg.bias -
                                streakValue(cfg, data.streakPhases, c);
        sq += residual * residual;
        ++count;
      }
    }
  }
  const double sigma = std::sqrt(sq / static_cast<double>(count));
  CHECK(sigma == doctest::Approx(cfg.noiseSigma).epsilon(0.05));
}

TEST_CASE("foreground fraction stays within 10..70% on every slice") {
  const Dataset data = generateDataset(DatasetConfig{}, 33);
  for (const PhantomSlice& s : data.slices) {
    const double frac = static_cast<double>((s.clean.array() > 0.0).count()) /
                        static_cast<double>(s.clean.size());
    CHECK(frac >= 0.10);
    CHECK(frac <= 0.70);
  }
}

TEST_CASE("intensities stay in [-1,1]") {
  const Dataset data = generateDataset(DatasetConfig{}, 3);
  for (const PhantomSlice& s : data.slices) {
    CHECK(s.clean.minCoeff() >= -1.0);
    CHECK(s.clean.maxCoeff() <= 1.0);
    CHECK(s.degraded.minCoeff() >= -1.0);
    CHECK(s.degraded.maxCoeff() <= 1.0);
  }
}

TEST_CASE("split: 20 subjects at 7:1:2 give 7+7 train, 2 validation, 4 test") {
  std::vector<int> ids(20);
  for (int i = 0; i < 20; ++i) ids[static_cast<std::size_t>(i)] = i;
  const DatasetSplit split = splitSubjects(ids, 4);
  CHECK(split.trainCbct.size() == 7);
  CHECK(split.trainCt.size() == 7);
  CHECK(split.validation.size() == 2);
  CHECK(split.test.size() == 4);

  std::set<int> all;
  for (const auto* group : {&split.trainCbct, &split.trainCt, &split.validation, &split.test})
    all.insert(group->begin(), group->end());
  CHECK(all.size() == 20);  // disjoint and exhaustive

  std::set<int> cbct(split.trainCbct.begin(), split.trainCbct.end());
  for (int id : split.trainCt) CHECK(cbct.count(id) == 0);
}

TEST_CASE("split is deterministic and rejects tiny cohorts") {
  std::vector<int> ids(15);
  for (int i = 0; i < 15; ++i) ids[static_cast<std::size_t>(i)] = 100 + i;
  const DatasetSplit a = splitSubjects(ids, 8);
  const DatasetSplit b = splitSubjects(ids, 8);
  CHECK(a.trainCbct == b.trainCbct);
  CHECK(a.test == b.test);
  ids.resize(9);
  CHECK_THROWS_AS(splitSubjects(ids, 8), DomainError);
}

TEST_CASE("default dataset leaves 16+16 training subjects") {
  const Dataset data = generateDataset(DatasetConfig{}, 1);
  CHECK(data.split.trainCbct.size() == 16);
  CHECK(data.split.trainCt.size() == 16);
  CHECK(cbctSamples(data, data.split.trainCbct).size() == 128);
  CHECK(ctSamples(data, data.split.trainCt).size() == 128);
}

TEST_CASE("dataset save/load round-trip is bit-exact") {
  const Dataset data = generateDataset(tinyConfig(), 77);
  const auto dir = std::filesystem::temp_directory_path() / "rafm_dataset_test";
  std::filesystem::remove_all(dir);
  saveDataset(data, dir);

  const Dataset loaded = loadDataset(dir);
  CHECK(loaded.seed == data.seed);
  CHECK(loaded.config.subjects == data.config.subjects);
  CHECK(loaded.split.trainCbct == data.split.trainCbct);
  CHECK(loaded.split.test == data.split.test);
  CHECK(slicesEqual(loaded, data));
  CHECK(loaded.subjects[3].anatomyClass == data.subjects[3].anatomyClass);
  CHECK(loaded.subjects[3].ellipses.size() == data.subjects[3].ellipses.size());
  CHECK(loaded.streakPhases == data.streakPhases);

  const std::uint64_t h1 = datasetHash(dir);
  saveDataset(loaded, dir);
  CHECK(datasetHash(dir) == h1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("anatomy classes are balanced round-robin") {
  const Dataset data = generateDataset(tinyConfig(), 2);
  for (const Subject& s : data.subjects) CHECK(s.anatomyClass == s.id % 4);
}

TEST_CASE("invalid dataset configs are rejected") {
  DatasetConfig cfg = tinyConfig();
  cfg.subjects = 5;
  CHECK_THROWS_AS(generateDataset(cfg, 1), ConfigError);
  cfg = tinyConfig();
  cfg.imageH = 10;  // not a multiple of 4
  CHECK_THROWS_AS(generateDataset(cfg, 1), ConfigError);
  cfg = tinyConfig();
  cfg.noiseSigma = -0.1;
  CHECK_THROWS_AS(generateDataset(cfg, 1), ConfigError);
}

TEST_CASE("point clouds: zero transform matches the source distribution") {
  PointcloudConfig cfg;
  cfg.samplesPerDomain = 4000;
  const PointcloudTask task = generatePointcloudTask(cfg, 6);
  REQUIRE(task.source.size() == 4000);
  REQUIRE(task.targetLabels.size() == 4000);

  Vector meanSource = Vector::Zero(2), meanTarget = Vector::Zero(2);
  for (const Vector& p : task.source) meanSource += p;
  for (const Vector& p : task.target) meanTarget += p;
  meanSource /= 4000.0;
  meanTarget /= 4000.0;
  // Same distribution, fresh draws: means agree within sampling error.
  CHECK((meanSource - meanTarget).norm() <= 0.06);
}

TEST_CASE("point clouds are reproducible and honor the configured offset") {
  PointcloudConfig cfg;
  cfg.samplesPerDomain = 4000;
  cfg.offsetX = 2.0;
  cfg.offsetY = -1.0;
  const PointcloudTask a = generatePointcloudTask(cfg, 9);
  const PointcloudTask b = generatePointcloudTask(cfg, 9);
  CHECK(a.source[17] == b.source[17]);
  CHECK(a.target[23] == b.target[23]);

  PointcloudConfig base = cfg;
  base.offsetX = 0.0;
  base.offsetY = 0.0;
  const PointcloudTask zero = generatePointcloudTask(base, 9);
  Vector shifted = Vector::Zero(2), unshifted = Vector::Zero(2);
  for (const Vector& p : a.target) shifted += p;
  for (const Vector& p : zero.target) unshifted += p;
  shifted /= 4000.0;
  unshifted /= 4000.0;
  // Mean displacement equals the offset within 3 sigma / sqrt(n).
  const double tolerance = 3.0 * 1.0 / std::sqrt(4000.0);
  CHECK(std::abs(shifted[0] - unshifted[0] - 2.0) <= tolerance);
  CHECK(std::abs(shifted[1] - unshifted[1] + 1.0) <= tolerance);
}

TEST_CASE("point cloud labels mark the two moons") {
  PointcloudConfig cfg;
  cfg.samplesPerDomain = 500;
  cfg.noiseSigma = 0.0;
  const PointcloudTask task = generatePointcloudTask(cfg, 11);
  for (std::size_t i = 0; i < task.source.size(); ++i) {
    // Noise-free moons: label 0 lies on the upper arc (y >= 0).
    if (task.sourceLabels[i] == 0)
      CHECK(task.source[i][1] >= -1e-12);
    else
      CHECK(task.source[i][1] <= 0.5 + 1e-12);
  }
}
