#include "lencon/training/batching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace lencon {

void BatchScheme::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batching: batch_size must be positive");
  if (sample_pool == 0) throw std::invalid_argument("batching: sample_pool must be positive");
  if (regroup_every == 0) {
    throw std::invalid_argument("batching: regroup_every must be positive");
  }
}

BatchScheme BatchScheme::scaled_to(std::size_t corpus_size) const {
  BatchScheme s = *this;
  if (corpus_size == 0 || corpus_size >= sample_pool) return s;
  s.sample_pool = corpus_size;
  const double ratio = static_cast<double>(corpus_size) / static_cast<double>(sample_pool);
  s.regroup_every = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(regroup_every) * ratio)));
  return s;
}

std::vector<Batch> make_batches(std::span<const EncodedPair> corpus,
                                const BatchScheme& scheme, std::mt19937_64& rng) {
  scheme.validate();
  if (corpus.empty()) throw std::invalid_argument("make_batches: empty corpus");

  std::vector<std::size_t> pool;
  if (corpus.size() >= scheme.sample_pool) {
    pool.resize(corpus.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(scheme.sample_pool);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
    pool.resize(scheme.sample_pool);
    for (auto& i : pool) i = pick(rng);
  }

  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i : pool) buckets[corpus[i].source.size()].push_back(i);

  std::vector<Batch> full;
  std::vector<Batch> partial;
  for (const auto& [len, members] : buckets) {
    for (std::size_t start = 0; start < members.size(); start += scheme.batch_size) {
      const std::size_t end = std::min(members.size(), start + scheme.batch_size);
      Batch b;
      for (std::size_t k = start; k < end; ++k) b.push_back(&corpus[members[k]]);
      (b.size() == scheme.batch_size ? full : partial).push_back(std::move(b));
    }
  }
  std::shuffle(full.begin(), full.end(), rng);
  std::shuffle(partial.begin(), partial.end(), rng);
  for (auto& b : partial) full.push_back(std::move(b));
  if (full.size() > scheme.regroup_every) full.resize(scheme.regroup_every);
  return full;
}

BatchStream::BatchStream(std::span<const EncodedPair> corpus, const BatchScheme& scheme,
                         std::uint64_t seed)
    : corpus_(corpus), scheme_(scheme.scaled_to(corpus.size())), rng_(seed) {
  scheme_.validate();
  if (corpus.empty()) throw std::invalid_argument("BatchStream: empty corpus");
}

const Batch& BatchStream::next() {
  if (pos_ == cycle_.size()) {
    cycle_ = make_batches(corpus_, scheme_, rng_);
    pos_ = 0;
    ++cycles_;
  }
  return cycle_[pos_++];
}

void BatchStream::skip(std::size_t batches) {
  for (std::size_t i = 0; i < batches; ++i) next();
}

}  // namespace lencon
