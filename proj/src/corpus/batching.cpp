#include "prokd/corpus/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "prokd/error.hpp"

namespace prokd::corpus {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

BatchIterator::BatchIterator(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed)
    : corpus_size_(corpus_size), batch_size_(batch_size), seed_(seed) {
  if (corpus_size == 0) throw Error("corpus", "batch iterator over an empty corpus");
  if (batch_size == 0) throw Error("corpus", "batch size must be at least 1");
}

std::vector<Batch> BatchIterator::epoch(std::size_t e) const {
  std::vector<std::size_t> order(corpus_size_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed_, 0x6261746368ULL, e));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < corpus_size_; start += batch_size_) {
    const std::size_t end = std::min(corpus_size_, start + batch_size_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace prokd::corpus
