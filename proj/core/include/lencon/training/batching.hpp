#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lencon/data/corpus.hpp"

namespace lencon {

struct BatchScheme {
  std::size_t batch_size = 80;
  std::size_t sample_pool = 800000;
  std::size_t regroup_every = 10000;

  void validate() const;
  // Pool and regroup interval after shrinking to a corpus smaller than the
  // pool (ratio kept, regroup at least 1).
  BatchScheme scaled_to(std::size_t corpus_size) const;
};

using Batch = std::vector<const EncodedPair*>;

// One regrouping cycle: sample the pool, bucket by source length, cut into
// batch_size groups, shuffle the full groups and append partial ones, keep at
// most regroup_every groups. Uses the scheme as given (no scaling).
std::vector<Batch> make_batches(std::span<const EncodedPair> corpus,
                                const BatchScheme& scheme, std::mt19937_64& rng);

// Endless stream of cycles over a corpus, scaled to its size.
class BatchStream {
 public:
  BatchStream(std::span<const EncodedPair> corpus, const BatchScheme& scheme,
              std::uint64_t seed);

  const Batch& next();
  void skip(std::size_t batches);
  std::size_t cycles() const { return cycles_; }
  const BatchScheme& effective_scheme() const { return scheme_; }

 private:
  std::span<const EncodedPair> corpus_;
  BatchScheme scheme_;
  std::mt19937_64 rng_;
  std::vector<Batch> cycle_;
  std::size_t pos_ = 0;
  std::size_t cycles_ = 0;
};

}  // namespace lencon
