#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lencon/evaluation/rouge.hpp"

namespace lencon {

inline constexpr std::size_t kLengthTolerance = 5;

// Output byte lengths decoded for one desired length; no desired length means
// free decoding.
struct LengthGroup {
  std::optional<std::size_t> desired;
  std::vector<std::size_t> lengths;
};

struct LengthSummary {
  std::optional<std::size_t> desired;
  std::size_t count = 0;
  double mean_length = 0.0;
  double stddev = 0.0;
  // Only for groups with a target.
  std::optional<double> mean_abs_deviation;
  std::optional<double> fraction_within;
  std::size_t bin_width = 5;
  std::map<std::size_t, std::size_t> histogram;
};

LengthSummary length_report(const LengthGroup& group, std::size_t bin_width = 5,
                            std::size_t tolerance = kLengthTolerance);

// Groups lengths by their desired-length label.
std::vector<LengthGroup> group_lengths(std::span<const std::optional<std::size_t>> desired,
                                       std::span<const std::size_t> lengths);

struct SystemOutputs {
  std::string name;
  std::vector<Tokens> candidates;
  std::vector<std::optional<std::size_t>> desired;  // optional, one per document
};

struct RougeScores {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

struct EvalOptions {
  std::size_t permutation_iterations = 10000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t bin_width = 5;
};

struct EvalReport {
  std::vector<std::string> systems;
  std::vector<std::size_t> limits;
  std::size_t documents = 0;
  // means[system][limit index]
  std::vector<std::vector<RougeScores>> means;
  // per_document[system][limit index][doc]
  std::vector<std::vector<std::vector<RougeScores>>> per_document;
  // p_values[limit index][metric][i][j]; metric order rouge1, rouge2, rougeL
  std::vector<std::vector<std::vector<std::vector<double>>>> p_values;
  // lengths[system], grouped by desired length
  std::vector<std::vector<LengthSummary>> lengths;

  std::string to_json() const;
};

RougeScores score_document(std::span<const std::string> candidate,
                           std::span<const Tokens> references);

// Candidates are truncated to each limit; references never are.
EvalReport evaluate(std::span<const SystemOutputs> systems,
                    std::span<const std::vector<Tokens>> references,
                    std::span<const std::size_t> limits, const EvalOptions& options = {});

}  // namespace lencon
