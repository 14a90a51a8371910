#pragma once

// Fixed-capacity rolling FIFO of (feature, sample) entries from the target
// domain, with exact linear-scan top-1 cosine retrieval.

#include "rafm/common.hpp"
#include "rafm/encoder.hpp"

#include <cstddef>
#include <deque>
#include <span>

namespace rafm {

struct BankEntry {
  FeatureVector feature;
  Matrix sample;
  int subjectId = -1;
  int sliceId = -1;
  std::uint64_t insertionIndex = 0;  // assigned by the bank on enqueue
};

class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity) : capacity_(capacity) {}

  // Appends the batch in order, then evicts oldest entries until the size is
  // back within capacity. With capacity 0 this is a no-op (degenerate
  // random-coupling mode).
  void enqueue(std::span<const BankEntry> batch);

  struct Retrieval {
    Matrix sample;
    Scalar similarity = 0;
    std::uint64_t insertionIndex = 0;
    std::size_t position = 0;  // current position inside the queue
    int subjectId = -1;
    int sliceId = -1;
  };

  // Entry maximizing cosine similarity with the query; ties break toward the
  // lowest insertion index. Throws DomainError on an empty bank.
  Retrieval retrieveTop1(const FeatureVector& query) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const BankEntry& entryAt(std::size_t position) const { return entries_[position]; }

 private:
  std::size_t capacity_;
  std::deque<BankEntry> entries_;
  std::uint64_t nextInsertionIndex_ = 0;
};

}  // namespace rafm
