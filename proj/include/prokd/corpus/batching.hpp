#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace prokd::corpus {

using Batch = std::vector<std::size_t>;  // sentence indices

// Seeded per-epoch shuffling into fixed-size batches (last one may be short).
// The permutation for epoch e depends only on (seed, e).
class BatchIterator {
 public:
  BatchIterator(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed);

  std::vector<Batch> epoch(std::size_t e) const;
  std::size_t batches_per_epoch() const noexcept {
    return (corpus_size_ + batch_size_ - 1) / batch_size_;
  }
  std::size_t corpus_size() const noexcept { return corpus_size_; }

 private:
  std::size_t corpus_size_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

// Seed derivation shared by every component that needs a sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace prokd::corpus
