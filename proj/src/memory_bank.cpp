#include "rafm/memory_bank.hpp"

namespace rafm {

void MemoryBank::enqueue(std::span<const BankEntry> batch) {
  if (capacity_ == 0) return;
  for (const BankEntry& e : batch) {
    BankEntry stored = e;
    stored.insertionIndex = nextInsertionIndex_++;
    entries_.push_back(std::move(stored));
  }
  while (entries_.size() > capacity_) entries_.pop_front();
}

MemoryBank::Retrieval MemoryBank::retrieveTop1(const FeatureVector& query) const {
  if (entries_.empty()) throw DomainError("retrieveTop1: memory bank is empty");
  std::size_t best = 0;
  Scalar bestSim = cosine(query, entries_[0].feature);
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const Scalar sim = cosine(query, entries_[i].feature);
    // Strict improvement only: entries are stored in insertion order, so the
    // first maximum is the lowest insertion index.
    if (sim > bestSim) {
      bestSim = sim;
      best = i;
    }
  }
  const BankEntry& e = entries_[best];
  return Retrieval{e.sample, bestSim, e.insertionIndex, best, e.subjectId, e.sliceId};
}

}  // namespace rafm
