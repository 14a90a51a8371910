#include "rafm/coupling.hpp"

#include <limits>

namespace rafm {

std::string strategyName(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Batchwise: return "batchwise";
    case Strategy::Retrieval: return "retrieval";
    case Strategy::Paired: return "paired";
  }
  throw DomainError("unknown strategy");
}

Strategy parseStrategy(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "batchwise") return Strategy::Batchwise;
  if (name == "retrieval") return Strategy::Retrieval;
  if (name == "paired") return Strategy::Paired;
  throw ConfigError("unknown strategy '" + name + "' (random|batchwise|retrieval|paired)");
}

namespace {

CoupledPair makePair(const DomainSample& a, const DomainSample& b, Provenance prov,
                     std::optional<Scalar> sim) {
  CoupledPair p;
  p.x0 = a.image;
  p.x1 = b.image;
  p.subject0 = a.subjectId;
  p.subject1 = b.subjectId;
  p.slice0 = a.sliceId;
  p.slice1 = b.sliceId;
  p.class0 = a.anatomyClass;
  p.class1 = b.anatomyClass;
  p.provenance = prov;
  p.similarity = sim;
  return p;
}

}  // namespace

CouplingBatch coupleRandom(std::span<const DomainSample> cbctBatch,
                           std::span<const DomainSample> ctBatch, Rng& rng) {
  if (cbctBatch.empty() || ctBatch.empty())
    throw DomainError("coupleRandom: empty batch");
  CouplingBatch out;
  out.strategy = Strategy::Random;
  for (const DomainSample& x0 : cbctBatch) {
    const std::size_t j = static_cast<std::size_t>(rng.integer(ctBatch.size()));
    out.pairs.push_back(makePair(x0, ctBatch[j], Provenance::Random, std::nullopt));
  }
  return out;
}

// Hungarian algorithm with potentials (minimization form); score is negated.
std::vector<int> solveMaxAssignment(const Matrix& score) {
  if (score.rows() != score.cols() || score.rows() == 0)
    throw DimensionError("solveMaxAssignment: square non-empty score matrix required");
  const int n = static_cast<int>(score.rows());
  const Scalar kInf = std::numeric_limits<Scalar>::infinity();

  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> matchedRow(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    matchedRow[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = matchedRow[j0];
      int j1 = -1;
      Scalar delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[matchedRow[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (matchedRow[j0] != 0);
    do {
      const int j1 = way[j0];
      matchedRow[j0] = matchedRow[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> rowToCol(n, -1);
  for (int j = 1; j <= n; ++j)
    if (matchedRow[j] > 0) rowToCol[matchedRow[j] - 1] = j - 1;
  return rowToCol;
}

CouplingBatch coupleBatchwise(std::span<const DomainSample> cbctBatch,
                              std::span<const DomainSample> ctBatch,
                              const FrozenEncoder& encoder) {
  if (cbctBatch.empty()) throw DomainError("coupleBatchwise: empty batch");
  if (cbctBatch.size() != ctBatch.size())
    throw DomainError("coupleBatchwise: batch sizes disagree, " +
                      std::to_string(cbctBatch.size()) + " vs " + std::to_string(ctBatch.size()));
  const int n = static_cast<int>(cbctBatch.size());

  std::vector<FeatureVector> zc, zt;
  zc.reserve(n);
  zt.reserve(n);
  for (const DomainSample& s : cbctBatch) zc.push_back(encoder.encode(s.image));
  for (const DomainSample& s : ctBatch) zt.push_back(encoder.encode(s.image));

  Matrix sim(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sim(i, j) = cosine(zc[i], zt[j]);

  const std::vector<int> assignment = solveMaxAssignment(sim);
  CouplingBatch out;
  out.strategy = Strategy::Batchwise;
  for (int i = 0; i < n; ++i)
    out.pairs.push_back(
        makePair(cbctBatch[i], ctBatch[assignment[i]], Provenance::Batchwise, sim(i, assignment[i])));
  return out;
}

CouplingBatch coupleRetrieval(std::span<const DomainSample> cbctBatch, const MemoryBank& bank,
                              const FrozenEncoder& encoder,
                              std::span<const DomainSample> ctFallback, Rng& rng) {
  if (cbctBatch.empty()) throw DomainError("coupleRetrieval: empty batch");
  if (bank.empty()) {
    // First-iteration edge: nothing enqueued yet.
    CouplingBatch out = coupleRandom(cbctBatch, ctFallback, rng);
    out.strategy = Strategy::Retrieval;
    out.usedFallback = true;
    return out;
  }
  CouplingBatch out;
  out.strategy = Strategy::Retrieval;
  for (const DomainSample& x0 : cbctBatch) {
    const MemoryBank::Retrieval hit = bank.retrieveTop1(encoder.encode(x0.image));
    CoupledPair p;
    p.x0 = x0.image;
    p.x1 = hit.sample;
    p.subject0 = x0.subjectId;
    p.subject1 = hit.subjectId;
    p.slice0 = x0.sliceId;
    p.slice1 = hit.sliceId;
    p.class0 = x0.anatomyClass;
    p.class1 = -1;
    p.provenance = Provenance::Retrieved;
    p.similarity = hit.similarity;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

CouplingBatch couplePaired(std::span<const DomainSample> cbctBatch,
                           std::span<const DomainSample> ctBatch) {
  if (cbctBatch.empty()) throw DomainError("couplePaired: empty batch");
  if (cbctBatch.size() != ctBatch.size())
    throw DataError("couplePaired: batch sizes disagree");
  CouplingBatch out;
  out.strategy = Strategy::Paired;
  for (std::size_t i = 0; i < cbctBatch.size(); ++i) {
    if (cbctBatch[i].subjectId != ctBatch[i].subjectId ||
        cbctBatch[i].sliceId != ctBatch[i].sliceId)
      throw DataError("couplePaired: counterpart mismatch at position " + std::to_string(i));
    out.pairs.push_back(makePair(cbctBatch[i], ctBatch[i], Provenance::Paired, std::nullopt));
  }
  return out;
}

}  // namespace rafm
