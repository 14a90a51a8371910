#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rafm/data_synth.hpp"
#include "rafm/encoder.hpp"
#include "rafm/memory_bank.hpp"

#include <map>

using namespace rafm;

namespace {

Matrix randomImage(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("encode is pure: identical inputs give bitwise-identical features") {
  Rng rng(2);
  const Matrix x = randomImage(16, 16, rng);
  const FrozenEncoder enc(16, 16, 64, 1234);
  const FeatureVector a = enc.encode(x);
  const FeatureVector b = enc.encode(x);
  CHECK(a.values == b.values);

  const FrozenEncoder sameSeed(16, 16, 64, 1234);
  CHECK(sameSeed.encode(x).values == a.values);
}

TEST_CASE("encoded features are unit norm") {
  Rng rng(3);
  const FrozenEncoder enc(16, 16, 64, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = randomImage(16, 16, rng);
    CHECK(std::abs(enc.encode(x).values.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("encoding is locally continuous under tiny noise") {
  Rng rng(4);
  const FrozenEncoder enc(16, 16, 64, 10);
  const Matrix x = randomImage(16, 16, rng);
  Matrix noisy = x;
  for (Eigen::Index r = 0; r < noisy.rows(); ++r)
    for (Eigen::Index c = 0; c < noisy.cols(); ++c) noisy(r, c) += 1e-6 * rng.normal();
  CHECK(cosine(enc.encode(x), enc.encode(noisy)) >= 0.999);
}

TEST_CASE("all-zero input is a degenerate-input error") {
  const FrozenEncoder enc(16, 16, 64, 11);
  CHECK_THROWS_AS(enc.encode(Matrix::Zero(16, 16)), DomainError);
  CHECK_THROWS_AS(enc.encode(Matrix::Zero(8, 8)), DimensionError);
}

TEST_CASE("pooling stage reduces 16x16 inputs to a 4x4 grid") {
  const FrozenEncoder enc(16, 16, 8, 3);
  CHECK(enc.pooledDim() == 16);
  const FrozenEncoder tiny(1, 2, 8, 3);  // point samples skip pooling
  CHECK(tiny.pooledDim() == 2);
}

TEST_CASE("cosine: self, orthogonal and antipodal features") {
  Vector e1 = Vector::Zero(4), e2 = Vector::Zero(4);
  e1[0] = 1.0;
  e2[1] = 1.0;
  const FeatureVector a{e1}, b{e2}, na{-e1};
  CHECK(cosine(a, a) == 1.0);
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(a, na) == -1.0);
}

TEST_CASE("cosine is symmetric") {
  Rng rng(5);
  const FrozenEncoder enc(16, 16, 64, 12);
  const FeatureVector a = enc.encode(randomImage(16, 16, rng));
  const FeatureVector b = enc.encode(randomImage(16, 16, rng));
  CHECK(cosine(a, b) == cosine(b, a));
}

TEST_CASE("retrieval probe: top-1 CT slice shares the anatomy class >= 80%") {
  DatasetConfig cfg;
  cfg.subjects = 72;  // leaves 26 CBCT probe subjects = 208 query slices
  const Dataset data = generateDataset(cfg, 71);
  const FrozenEncoder enc(cfg.imageH, cfg.imageW, 64, 101);

  // Bank over CT-group clean slices; queries from CBCT-group degraded slices.
  const std::vector<DomainSample> ct = ctSamples(data, data.split.trainCt);
  const std::vector<DomainSample> cbct = cbctSamples(data, data.split.trainCbct);

  MemoryBank bank(4096);
  std::vector<BankEntry> entries;
  for (const DomainSample& s : ct)
    entries.push_back(BankEntry{enc.encode(s.image), s.image, s.subjectId, s.sliceId, 0});
  bank.enqueue(entries);

  std::map<std::pair<int, int>, int> classOf;
  for (const PhantomSlice& s : data.slices) classOf[{s.subjectId, s.sliceId}] = s.anatomyClass;

  int probes = 0, agreements = 0;
  for (const DomainSample& query : cbct) {
    if (probes >= 200) break;
    const auto hit = bank.retrieveTop1(enc.encode(query.image));
    agreements += classOf.at({hit.subjectId, hit.sliceId}) == query.anatomyClass;
    ++probes;
  }
  REQUIRE(probes >= 190);
  CHECK(static_cast<double>(agreements) / probes >= 0.80);
}
