#include "lencon/data/length_stats.hpp"

#include <ostream>
#include <stdexcept>

namespace lencon {

LengthStats length_stats(std::span<const std::size_t> lengths,
                         std::size_t bin_width) {
  if (lengths.empty()) throw std::invalid_argument("length_stats: empty input");
  if (bin_width == 0) throw std::invalid_argument("length_stats: zero bin width");
  LengthStats stats;
  stats.bin_width = bin_width;
  stats.count = lengths.size();
  double total = 0.0;
  for (std::size_t len : lengths) {
    total += static_cast<double>(len);
    ++stats.histogram[(len / bin_width) * bin_width];
  }
  stats.mean = total / static_cast<double>(lengths.size());
  return stats;
}

LengthStats target_length_stats(std::span<const SentenceSummaryPair> pairs,
                                std::size_t bin_width) {
  std::vector<std::size_t> lengths;
  lengths.reserve(pairs.size());
  for (const auto& p : pairs) lengths.push_back(p.target_bytes);
  return length_stats(lengths, bin_width);
}

void write_length_stats_csv(std::ostream& out, const LengthStats& stats) {
  out << "bin_start,count\n";
  for (const auto& [start, count] : stats.histogram) {
    out << start << ',' << count << '\n';
  }
  out << "mean," << stats.mean << '\n';
}

}  // namespace lencon
