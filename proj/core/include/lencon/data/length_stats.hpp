#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "lencon/data/corpus.hpp"

namespace lencon {

struct LengthStats {
  double mean = 0.0;
  std::size_t bin_width = 5;
  std::map<std::size_t, std::size_t> histogram;  // bin start -> count
  std::size_t count = 0;
};

LengthStats length_stats(std::span<const std::size_t> lengths,
                         std::size_t bin_width = 5);
LengthStats target_length_stats(std::span<const SentenceSummaryPair> pairs,
                                std::size_t bin_width = 5);

// `bin_start,count` rows followed by a `mean,<value>` footer.
void write_length_stats_csv(std::ostream& out, const LengthStats& stats);

}  // namespace lencon
