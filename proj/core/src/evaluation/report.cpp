#include "lencon/evaluation/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "lencon/evaluation/significance.hpp"

namespace lencon {

LengthSummary length_report(const LengthGroup& group, std::size_t bin_width,
                            std::size_t tolerance) {
  if (group.lengths.empty()) throw std::invalid_argument("length_report: empty group");
  if (bin_width == 0) throw std::invalid_argument("length_report: bin width must be positive");
  LengthSummary s;
  s.desired = group.desired;
  s.count = group.lengths.size();
  s.bin_width = bin_width;
  double total = 0.0;
  for (std::size_t l : group.lengths) {
    total += static_cast<double>(l);
    ++s.histogram[l / bin_width * bin_width];
  }
  s.mean_length = total / static_cast<double>(s.count);
  double var = 0.0;
  for (std::size_t l : group.lengths) {
    const double d = static_cast<double>(l) - s.mean_length;
    var += d * d;
  }
  s.stddev = std::sqrt(var / static_cast<double>(s.count));
  if (group.desired) {
    const double target = static_cast<double>(*group.desired);
    double dev = 0.0;
    std::size_t within = 0;
    for (std::size_t l : group.lengths) {
      const double d = std::abs(static_cast<double>(l) - target);
      dev += d;
      if (d <= static_cast<double>(tolerance)) ++within;
    }
    s.mean_abs_deviation = dev / static_cast<double>(s.count);
    s.fraction_within = static_cast<double>(within) / static_cast<double>(s.count);
  }
  return s;
}

std::vector<LengthGroup> group_lengths(std::span<const std::optional<std::size_t>> desired,
                                       std::span<const std::size_t> lengths) {
  if (desired.size() != lengths.size()) {
    throw std::invalid_argument("group_lengths: one desired label per output required");
  }
  // Free outputs first, then ascending desired length.
  std::map<std::optional<std::size_t>, LengthGroup> groups;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    auto& g = groups[desired[i]];
    g.desired = desired[i];
    g.lengths.push_back(lengths[i]);
  }
  std::vector<LengthGroup> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

RougeScores score_document(std::span<const std::string> candidate,
                           std::span<const Tokens> references) {
  return {rouge_n(candidate, references, 1), rouge_n(candidate, references, 2),
          rouge_l(candidate, references)};
}

namespace {

std::size_t rendered_bytes(const Tokens& tokens) {
  std::size_t n = 0;
  for (const auto& t : tokens) n += t.size();
  return tokens.empty() ? 0 : n + tokens.size() - 1;
}

double metric(const RougeScores& s, std::size_t m) {
  return m == 0 ? s.rouge1 : m == 1 ? s.rouge2 : s.rougeL;
}

}  // namespace

EvalReport evaluate(std::span<const SystemOutputs> systems,
                    std::span<const std::vector<Tokens>> references,
                    std::span<const std::size_t> limits, const EvalOptions& options) {
  if (systems.empty()) throw std::invalid_argument("evaluate: no systems");
  if (limits.empty()) throw std::invalid_argument("evaluate: no length limits");
  const std::size_t docs = references.size();
  if (docs == 0) throw std::invalid_argument("evaluate: no documents");
  for (const auto& refs : references) {
    if (refs.empty()) throw std::invalid_argument("evaluate: document without references");
  }
  for (const auto& s : systems) {
    if (s.candidates.size() != docs) {
      throw std::invalid_argument("evaluate: system '" + s.name + "' has " +
                                  std::to_string(s.candidates.size()) +
                                  " outputs for " + std::to_string(docs) + " documents");
    }
    if (!s.desired.empty() && s.desired.size() != docs) {
      throw std::invalid_argument("evaluate: system '" + s.name +
                                  "' has misaligned desired lengths");
    }
  }

  EvalReport report;
  report.limits.assign(limits.begin(), limits.end());
  report.documents = docs;
  const std::size_t nl = limits.size();
  report.per_document.assign(systems.size(),
                             std::vector<std::vector<RougeScores>>(
                                 nl, std::vector<RougeScores>(docs)));

  // Each document writes only its own slots, so worker count cannot change
  // the result.
  const auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      for (std::size_t s = 0; s < systems.size(); ++s) {
        for (std::size_t l = 0; l < nl; ++l) {
          const Tokens cut = truncate_bytes(systems[s].candidates[d], limits[l]);
          report.per_document[s][l][d] = score_document(cut, references[d]);
        }
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, docs);
  if (workers == 1) {
    score_range(0, docs);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (docs + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(docs, begin + chunk);
      if (begin < end) pool.emplace_back(score_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t s = 0; s < systems.size(); ++s) {
    report.systems.push_back(systems[s].name);
    std::vector<RougeScores> means(nl);
    for (std::size_t l = 0; l < nl; ++l) {
      for (const auto& r : report.per_document[s][l]) {
        means[l].rouge1 += r.rouge1;
        means[l].rouge2 += r.rouge2;
        means[l].rougeL += r.rougeL;
      }
      means[l].rouge1 /= static_cast<double>(docs);
      means[l].rouge2 /= static_cast<double>(docs);
      means[l].rougeL /= static_cast<double>(docs);
    }
    report.means.push_back(means);

    std::vector<std::size_t> lengths;
    for (const auto& c : systems[s].candidates) lengths.push_back(rendered_bytes(c));
    std::vector<std::optional<std::size_t>> desired = systems[s].desired;
    if (desired.empty()) desired.assign(docs, std::nullopt);
    std::vector<LengthSummary> summaries;
    for (const auto& g : group_lengths(desired, lengths)) {
      summaries.push_back(length_report(g, options.bin_width));
    }
    report.lengths.push_back(std::move(summaries));
  }

  const std::size_t ns = systems.size();
  report.p_values.assign(nl, std::vector<std::vector<std::vector<double>>>(
                                 3, std::vector<std::vector<double>>(
                                        ns, std::vector<double>(ns, 1.0))));
  std::vector<double> a(docs);
  std::vector<double> b(docs);
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t j = i + 1; j < ns; ++j) {
          for (std::size_t d = 0; d < docs; ++d) {
            a[d] = metric(report.per_document[i][l][d], m);
            b[d] = metric(report.per_document[j][l][d], m);
          }
          const double p = permutation_test(a, b, options.permutation_iterations,
                                            options.seed);
          report.p_values[l][m][i][j] = report.p_values[l][m][j][i] = p;
        }
      }
    }
  }
  return report;
}

std::string EvalReport::to_json() const {
  using nlohmann::ordered_json;
  static constexpr const char* kMetrics[] = {"rouge1", "rouge2", "rougeL"};
  ordered_json j;
  j["documents"] = documents;
  j["systems"] = systems;
  j["limits"] = limits;
  ordered_json scores = ordered_json::object();
  for (std::size_t s = 0; s < systems.size(); ++s) {
    ordered_json per_limit = ordered_json::object();
    for (std::size_t l = 0; l < limits.size(); ++l) {
      per_limit[std::to_string(limits[l])] = {{"rouge1", means[s][l].rouge1},
                                              {"rouge2", means[s][l].rouge2},
                                              {"rougeL", means[s][l].rougeL}};
    }
    scores[systems[s]] = per_limit;
  }
  j["scores"] = scores;
  ordered_json sig = ordered_json::object();
  for (std::size_t l = 0; l < limits.size(); ++l) {
    ordered_json per_metric = ordered_json::object();
    for (std::size_t m = 0; m < 3; ++m) per_metric[kMetrics[m]] = p_values[l][m];
    sig[std::to_string(limits[l])] = per_metric;
  }
  j["p_values"] = sig;
  ordered_json len = ordered_json::object();
  for (std::size_t s = 0; s < systems.size(); ++s) {
    ordered_json groups = ordered_json::array();
    for (const auto& g : lengths[s]) {
      ordered_json item;
      item["desired"] = g.desired ? ordered_json(*g.desired) : ordered_json("free");
      item["count"] = g.count;
      item["mean_length"] = g.mean_length;
      item["stddev"] = g.stddev;
      if (g.mean_abs_deviation) {
        item["mean_abs_deviation"] = *g.mean_abs_deviation;
        item["fraction_within_5"] = *g.fraction_within;
      }
      ordered_json hist = ordered_json::array();
      for (const auto& [bin, count] : g.histogram) hist.push_back({bin, count});
      item["histogram"] = hist;
      groups.push_back(item);
    }
    len[systems[s]] = groups;
  }
  j["lengths"] = len;
  return j.dump(2) + "\n";
}

}  // namespace lencon
