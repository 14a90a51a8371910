#pragma once

// Endpoint-coupling strategies: random pairing, batch-wise optimal
// assignment, retrieval from the memory bank, and the paired oracle.

#include "rafm/common.hpp"
#include "rafm/encoder.hpp"
#include "rafm/memory_bank.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rafm {

enum class Strategy { Random, Batchwise, Retrieval, Paired };

std::string strategyName(Strategy s);
Strategy parseStrategy(const std::string& name);

enum class Provenance { Random, Batchwise, Retrieved, Paired };

// One slice of one domain, tagged with its origin for the unpairedness
// checks. For CBCT samples `image` is the degraded slice; for CT samples the
// clean slice.
struct DomainSample {
  Matrix image;
  int subjectId = -1;
  int sliceId = -1;
  int anatomyClass = -1;
};

struct CoupledPair {
  Matrix x0, x1;
  int subject0 = -1, subject1 = -1;
  int slice0 = -1, slice1 = -1;
  int class0 = -1, class1 = -1;
  Provenance provenance = Provenance::Random;
  std::optional<Scalar> similarity;
};

struct CouplingBatch {
  Strategy strategy = Strategy::Random;
  std::vector<CoupledPair> pairs;
  bool usedFallback = false;  // retrieval asked on an empty bank
};

// Each x0 is paired with an independently uniform draw from the CT batch.
CouplingBatch coupleRandom(std::span<const DomainSample> cbctBatch,
                           std::span<const DomainSample> ctBatch, Rng& rng);

// One-to-one assignment maximizing total cosine similarity between encoded
// features; requires equal batch sizes.
CouplingBatch coupleBatchwise(std::span<const DomainSample> cbctBatch,
                              std::span<const DomainSample> ctBatch,
                              const FrozenEncoder& encoder);

// Top-1 retrieval from the bank per CBCT sample (many-to-one allowed). An
// empty bank falls back to random pairing over ctFallback.
CouplingBatch coupleRetrieval(std::span<const DomainSample> cbctBatch, const MemoryBank& bank,
                              const FrozenEncoder& encoder,
                              std::span<const DomainSample> ctFallback, Rng& rng);

// Identity pairing of ground-truth aligned batches; subject and slice ids
// must match position-wise.
CouplingBatch couplePaired(std::span<const DomainSample> cbctBatch,
                           std::span<const DomainSample> ctBatch);

// Maximum-total-score one-to-one assignment (Hungarian algorithm, O(n^3)).
// Returns the column assigned to each row.
std::vector<int> solveMaxAssignment(const Matrix& score);

}  // namespace rafm
