#include "rafm/data_synth.hpp"

#include "rafm/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rafm {

namespace {

constexpr Scalar kBackground = -0.9;
constexpr int kStreakCycles[3] = {2, 5, 9};
constexpr int kMaxSliceRetries = 50;

void validateConfig(const DatasetConfig& cfg) {
  if (cfg.subjects < 10) throw ConfigError("dataset needs at least 10 subjects for a 7:1:2 split");
  if (cfg.slicesPerSubject < 1) throw ConfigError("slices_per_subject must be positive");
  if (cfg.anatomyClasses < 1) throw ConfigError("anatomy_classes must be positive");
  if (cfg.imageH < 8 || cfg.imageW < 8 || cfg.imageH % 4 != 0 || cfg.imageW % 4 != 0)
    throw ConfigError("image size must be >= 8 and a multiple of 4 per side");
  if (cfg.noiseSigma < 0 || cfg.streakAmplitude < 0 || cfg.jitterSigma < 0)
    throw ConfigError("degradation parameters must be non-negative");
}

Scalar foregroundFraction(const Matrix& img) {
  return static_cast<Scalar>((img.array() > 0.0).count()) / static_cast<Scalar>(img.size());
}

}  // namespace

std::vector<Ellipse> anatomyClassTemplate(int anatomyClass) {
  // Layouts with distinct pooled-space signatures (bimodal, vertical, ring,
  // diagonal) and staggered intensities, so the frozen encoder separates the
  // classes even under heavy degradation.
  switch (((anatomyClass % 4) + 4) % 4) {
    case 0:  // two lateral lobes, dark midline
      return {{-0.45, 0.0, 0.28, 0.45, 0.0, 0.35},
              {0.45, 0.0, 0.28, 0.45, 0.0, 0.35}};
    case 1:  // tall body with stacked organs
      return {{0.0, 0.0, 0.45, 0.80, 0.0, 0.60},
              {0.0, 0.32, 0.22, 0.18, 0.0, 0.85},
              {0.0, -0.32, 0.22, 0.18, 0.0, 0.40}};
    case 2:  // bright annulus with a dark moat
      return {{0.0, 0.0, 0.70, 0.65, 0.0, 0.80},
              {0.0, 0.0, 0.34, 0.30, 0.0, -0.45},
              {0.0, 0.0, 0.12, 0.12, 0.0, 0.95}};
    default:  // three bright blobs along the diagonal
      return {{-0.38, -0.38, 0.28, 0.28, 0.0, 0.85},
              {0.0, 0.0, 0.32, 0.32, 0.0, 0.60},
              {0.38, 0.38, 0.28, 0.28, 0.0, 0.95}};
  }
}

Matrix renderEllipses(std::span<const Ellipse> ellipses, int rows, int cols, Scalar background) {
  Matrix img = Matrix::Constant(rows, cols, background);
  for (const Ellipse& e : ellipses) {
    const Scalar ca = std::cos(e.angle), sa = std::sin(e.angle);
    for (int r = 0; r < rows; ++r) {
      const Scalar y = -1.0 + (r + 0.5) * 2.0 / rows;
      for (int c = 0; c < cols; ++c) {
        const Scalar x = -1.0 + (c + 0.5) * 2.0 / cols;
        const Scalar dx = x - e.cx, dy = y - e.cy;
        const Scalar u = (dx * ca + dy * sa) / e.ax;
        const Scalar v = (-dx * sa + dy * ca) / e.ay;
        if (u * u + v * v <= 1.0) img(r, c) = e.intensity;  // later ellipses paint over
      }
    }
  }
  return img;
}

Scalar streakValue(const DatasetConfig& cfg, const std::array<Scalar, 3>& phases, int col) {
  Scalar s = 0;
  for (int k = 0; k < 3; ++k)
    s += std::sin(2.0 * EIGEN_PI * kStreakCycles[k] * (col + 0.5) / cfg.imageW + phases[k]);
  return cfg.streakAmplitude * s / 3.0;
}

Matrix degradeSlice(const Matrix& clean, const DatasetConfig& cfg,
                    const std::array<Scalar, 3>& phases, Rng& noiseRng) {
  Matrix out(clean.rows(), clean.cols());
  for (Eigen::Index r = 0; r < clean.rows(); ++r) {
    for (Eigen::Index c = 0; c < clean.cols(); ++c) {
      const Scalar noisy = clean(r, c) + cfg.bias + streakValue(cfg, phases, static_cast<int>(c)) +
                           cfg.noiseSigma * noiseRng.normal();
      out(r, c) = std::clamp(noisy, -1.0, 1.0);
    }
  }
  return out;
}

DatasetSplit splitSubjects(const std::vector<int>& subjectIds, std::uint64_t seed) {
  const std::size_t n = subjectIds.size();
  if (n < 10) throw DomainError("splitSubjects: need at least 10 subjects, got " +
                                std::to_string(n));
  std::vector<int> ids = subjectIds;
  Rng rng(mixSeed(seed, 0x5f17));
  rng.shuffle(ids);

  const std::size_t nVal = static_cast<std::size_t>(std::llround(n * 0.1));
  const std::size_t nTest = static_cast<std::size_t>(std::llround(n * 0.2));
  const std::size_t nTrain = n - nVal - nTest;
  const std::size_t nCbct = (nTrain + 1) / 2;

  DatasetSplit split;
  split.trainCbct.assign(ids.begin(), ids.begin() + nCbct);
  split.trainCt.assign(ids.begin() + nCbct, ids.begin() + nTrain);
  split.validation.assign(ids.begin() + nTrain, ids.begin() + nTrain + nVal);
  split.test.assign(ids.begin() + nTrain + nVal, ids.end());
  for (auto* group : {&split.trainCbct, &split.trainCt, &split.validation, &split.test})
    std::sort(group->begin(), group->end());
  return split;
}

Dataset generateDataset(const DatasetConfig& cfg, std::uint64_t seed) {
  validateConfig(cfg);
  Dataset data;
  data.config = cfg;
  data.seed = seed;

  Rng datasetRng(mixSeed(seed, 0xd5));
  for (auto& phase : data.streakPhases) phase = datasetRng.uniform(0.0, 2.0 * EIGEN_PI);

  for (int sid = 0; sid < cfg.subjects; ++sid) {
    Rng subjectRng(mixSeed(seed, 1000 + static_cast<std::uint64_t>(sid)));
    Subject subject;
    subject.id = sid;
    subject.anatomyClass = sid % cfg.anatomyClasses;
    subject.ellipses = anatomyClassTemplate(subject.anatomyClass);
    // Continuous within-class variation: a global body scale plus per-ellipse
    // perturbations, so coupling quality grades smoothly with similarity.
    const Scalar bodyScale = 1.0 + subjectRng.uniform(-0.15, 0.15);
    for (Ellipse& e : subject.ellipses) {
      e.cx += subjectRng.uniform(-0.08, 0.08);
      e.cy += subjectRng.uniform(-0.08, 0.08);
      e.ax *= bodyScale * (1.0 + subjectRng.uniform(-0.12, 0.12));
      e.ay *= bodyScale * (1.0 + subjectRng.uniform(-0.12, 0.12));
      e.intensity += subjectRng.uniform(-0.08, 0.08);
    }

    for (int k = 0; k < cfg.slicesPerSubject; ++k) {
      // Jittered copy of the subject anatomy; redraw if the foreground
      // fraction leaves [0.10, 0.70].
      Matrix clean;
      int attempt = 0;
      for (;; ++attempt) {
        if (attempt >= kMaxSliceRetries)
          throw DataError("slice generation failed for subject " + std::to_string(sid) +
                          " slice " + std::to_string(k) + " after " +
                          std::to_string(kMaxSliceRetries) + " retries");
        std::vector<Ellipse> jittered = subject.ellipses;
        const Scalar sigma = cfg.jitterSigma * 2.0;  // image width is 2 in [-1,1] coords
        for (Ellipse& e : jittered) {
          e.cx += sigma * subjectRng.normal();
          e.cy += sigma * subjectRng.normal();
        }
        clean = renderEllipses(jittered, cfg.imageH, cfg.imageW, kBackground);
        const Scalar frac = foregroundFraction(clean);
        if (frac >= 0.10 && frac <= 0.70) break;
      }

      PhantomSlice slice;
      slice.subjectId = sid;
      slice.sliceId = k;
      slice.anatomyClass = subject.anatomyClass;
      slice.clean = std::move(clean);
      slice.degraded = degradeSlice(slice.clean, cfg, data.streakPhases, subjectRng);
      data.slices.push_back(std::move(slice));
    }
    data.subjects.push_back(std::move(subject));
  }

  std::vector<int> ids(cfg.subjects);
  for (int i = 0; i < cfg.subjects; ++i) ids[i] = i;
  data.split = splitSubjects(ids, seed);
  return data;
}

std::vector<DomainSample> cbctSamples(const Dataset& data, std::span<const int> subjectIds) {
  std::vector<DomainSample> out;
  for (const PhantomSlice& s : data.slices)
    if (std::find(subjectIds.begin(), subjectIds.end(), s.subjectId) != subjectIds.end())
      out.push_back(DomainSample{s.degraded, s.subjectId, s.sliceId, s.anatomyClass});
  return out;
}

std::vector<DomainSample> ctSamples(const Dataset& data, std::span<const int> subjectIds) {
  std::vector<DomainSample> out;
  for (const PhantomSlice& s : data.slices)
    if (std::find(subjectIds.begin(), subjectIds.end(), s.subjectId) != subjectIds.end())
      out.push_back(DomainSample{s.clean, s.subjectId, s.sliceId, s.anatomyClass});
  return out;
}

namespace {

std::string joinInts(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> splitInts(const std::string& s) {
  std::vector<int> v;
  if (s.empty()) return v;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) v.push_back(static_cast<int>(parseInt(part)));
  return v;
}

std::string sliceFileName(int subjectId, int sliceId, const char* domain) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "s%03d_k%02d_%s.bin", subjectId, sliceId, domain);
  return buf;
}

std::string ellipseString(const std::vector<Ellipse>& ellipses) {
  std::string s;
  for (std::size_t i = 0; i < ellipses.size(); ++i) {
    const Ellipse& e = ellipses[i];
    if (i) s += ';';
    s += formatDouble(e.cx) + ":" + formatDouble(e.cy) + ":" + formatDouble(e.ax) + ":" +
         formatDouble(e.ay) + ":" + formatDouble(e.angle) + ":" + formatDouble(e.intensity);
  }
  return s;
}

std::vector<Ellipse> parseEllipses(const std::string& s) {
  std::vector<Ellipse> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ';')) {
    std::stringstream fields(part);
    std::string f;
    std::vector<Scalar> vals;
    while (std::getline(fields, f, ':')) vals.push_back(parseDouble(f));
    if (vals.size() != 6) throw DataError("malformed ellipse record '" + part + "'");
    out.push_back(Ellipse{vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]});
  }
  return out;
}

}  // namespace

void saveDataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "slices");

  KvFile index;
  index.set("schema_version", std::int64_t{1});
  index.set("kind", "rafm-phantom-dataset");
  index.set("seed", data.seed);
  index.set("subjects", static_cast<std::int64_t>(data.config.subjects));
  index.set("slices_per_subject", static_cast<std::int64_t>(data.config.slicesPerSubject));
  index.set("image_h", static_cast<std::int64_t>(data.config.imageH));
  index.set("image_w", static_cast<std::int64_t>(data.config.imageW));
  index.set("anatomy_classes", static_cast<std::int64_t>(data.config.anatomyClasses));
  index.set("bias", data.config.bias);
  index.set("streak_amp", data.config.streakAmplitude);
  index.set("noise_sigma", data.config.noiseSigma);
  index.set("jitter_sigma", data.config.jitterSigma);
  for (int k = 0; k < 3; ++k)
    index.set("streak_phase_" + std::to_string(k), data.streakPhases[static_cast<std::size_t>(k)]);
  index.set("split.train_cbct", joinInts(data.split.trainCbct));
  index.set("split.train_ct", joinInts(data.split.trainCt));
  index.set("split.validation", joinInts(data.split.validation));
  index.set("split.test", joinInts(data.split.test));
  for (const Subject& s : data.subjects) {
    const std::string prefix = "subject." + std::to_string(s.id) + ".";
    index.set(prefix + "class", static_cast<std::int64_t>(s.anatomyClass));
    index.set(prefix + "params", ellipseString(s.ellipses));
  }
  index.save(dir / "index.txt");

  for (const PhantomSlice& s : data.slices) {
    saveMatrix(s.clean, dir / "slices" / sliceFileName(s.subjectId, s.sliceId, "clean"));
    saveMatrix(s.degraded, dir / "slices" / sliceFileName(s.subjectId, s.sliceId, "degraded"));
  }
}

Dataset loadDataset(const std::filesystem::path& dir) {
  const KvFile index = KvFile::load(dir / "index.txt");
  if (index.getString("kind", "") != "rafm-phantom-dataset")
    throw DataError("not a dataset directory: " + dir.string());

  Dataset data;
  data.seed = index.requireUnsigned("seed");
  data.config.subjects = static_cast<int>(index.requireInt("subjects"));
  data.config.slicesPerSubject = static_cast<int>(index.requireInt("slices_per_subject"));
  data.config.imageH = static_cast<int>(index.requireInt("image_h"));
  data.config.imageW = static_cast<int>(index.requireInt("image_w"));
  data.config.anatomyClasses = static_cast<int>(index.requireInt("anatomy_classes"));
  data.config.bias = index.requireDouble("bias");
  data.config.streakAmplitude = index.requireDouble("streak_amp");
  data.config.noiseSigma = index.requireDouble("noise_sigma");
  data.config.jitterSigma = index.requireDouble("jitter_sigma");
  for (int k = 0; k < 3; ++k)
    data.streakPhases[static_cast<std::size_t>(k)] =
        index.requireDouble("streak_phase_" + std::to_string(k));
  data.split.trainCbct = splitInts(index.require("split.train_cbct"));
  data.split.trainCt = splitInts(index.require("split.train_ct"));
  data.split.validation = splitInts(index.require("split.validation"));
  data.split.test = splitInts(index.require("split.test"));

  for (int sid = 0; sid < data.config.subjects; ++sid) {
    const std::string prefix = "subject." + std::to_string(sid) + ".";
    Subject s;
    s.id = sid;
    s.anatomyClass = static_cast<int>(index.requireInt(prefix + "class"));
    s.ellipses = parseEllipses(index.require(prefix + "params"));
    data.subjects.push_back(std::move(s));

    for (int k = 0; k < data.config.slicesPerSubject; ++k) {
      PhantomSlice slice;
      slice.subjectId = sid;
      slice.sliceId = k;
      slice.anatomyClass = data.subjects.back().anatomyClass;
      slice.clean = loadMatrix(dir / "slices" / sliceFileName(sid, k, "clean"));
      slice.degraded = loadMatrix(dir / "slices" / sliceFileName(sid, k, "degraded"));
      if (slice.clean.rows() != data.config.imageH || slice.clean.cols() != data.config.imageW)
        throw DataError("slice shape does not match index for subject " + std::to_string(sid));
      data.slices.push_back(std::move(slice));
    }
  }
  return data;
}

std::uint64_t datasetHash(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  files.push_back(dir / "index.txt");
  for (const auto& entry : std::filesystem::directory_iterator(dir / "slices"))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin() + 1, files.end());

  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& f : files) {
    h = fnv1a(f.filename().string(), h);
    h = fnv1a(readFile(f), h);
  }
  return h;
}

PointcloudTask generatePointcloudTask(const PointcloudConfig& cfg, std::uint64_t seed) {
  if (cfg.samplesPerDomain < 1) throw ConfigError("samples_per_domain must be positive");
  if (cfg.noiseSigma < 0) throw ConfigError("noise sigma must be non-negative");

  auto drawMoons = [&](Rng& rng, std::vector<Vector>& points, std::vector<int>& labels) {
    for (int i = 0; i < cfg.samplesPerDomain; ++i) {
      const int moon = static_cast<int>(rng.integer(2));
      const Scalar theta = rng.uniform(0.0, EIGEN_PI);
      Vector p(2);
      if (moon == 0)
        p << std::cos(theta), std::sin(theta);
      else
        p << 1.0 - std::cos(theta), 0.5 - std::sin(theta);
      p[0] += cfg.noiseSigma * rng.normal();
      p[1] += cfg.noiseSigma * rng.normal();
      points.push_back(std::move(p));
      labels.push_back(moon);
    }
  };

  PointcloudTask task;
  Rng sourceRng(mixSeed(seed, 0x50));
  drawMoons(sourceRng, task.source, task.sourceLabels);

  Rng targetRng(mixSeed(seed, 0x51));
  drawMoons(targetRng, task.target, task.targetLabels);
  const Scalar ca = std::cos(cfg.rotation), sa = std::sin(cfg.rotation);
  for (Vector& p : task.target) {
    const Scalar x = p[0], y = p[1];
    p[0] = ca * x - sa * y + cfg.offsetX;
    p[1] = sa * x + ca * y + cfg.offsetY;
  }
  return task;
}

}  // namespace rafm
