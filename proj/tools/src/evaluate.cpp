#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "lencon/data/corpus.hpp"
#include "lencon/evaluation/report.hpp"

namespace lencon::cli {

namespace {

struct EvaluateOptions {
  std::vector<std::string> outputs;
  std::vector<std::string> names;
  std::vector<std::string> references;
  std::vector<std::size_t> limits = {30, 50, 75};
  std::string out = "report.json";
  std::string lengths_csv;
  std::size_t iterations = 10000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t bin_width = 5;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return cols;
    start = tab + 1;
  }
}

// Decode output (desired, bytes, logprob, summary) or one summary per line.
SystemOutputs read_system(const std::string& path, const std::string& name) {
  SystemOutputs sys;
  sys.name = name;
  std::size_t number = 0;
  for (const std::string& line : read_lines(path)) {
    ++number;
    const auto cols = split_tabs(line);
    if (cols.size() == 4) {
      sys.candidates.push_back(split_tokens(cols[3]));
      if (cols[0] == "free") {
        sys.desired.push_back(std::nullopt);
      } else {
        try {
          sys.desired.push_back(std::stoul(cols[0]));
        } catch (const std::exception&) {
          throw CliError(path + ": line " + std::to_string(number) +
                         ": bad desired length '" + cols[0] + "'");
        }
      }
    } else if (cols.size() == 1) {
      sys.candidates.push_back(split_tokens(cols[0]));
      sys.desired.push_back(std::nullopt);
    } else {
      throw CliError(path + ": line " + std::to_string(number) +
                     ": expected 4 tab-separated columns or a bare summary");
    }
  }
  return sys;
}

void write_lengths_csv(const std::filesystem::path& path, const EvalReport& report) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CliError("cannot write " + path.string());
  out << "system,desired,bin_start,count\n";
  for (std::size_t s = 0; s < report.systems.size(); ++s) {
    for (const LengthSummary& g : report.lengths[s]) {
      const std::string d = g.desired ? std::to_string(*g.desired) : "free";
      for (const auto& [bin, count] : g.histogram) {
        out << report.systems[s] << ',' << d << ',' << bin << ',' << count << '\n';
      }
    }
  }
}

void print_table(const EvalReport& report) {
  std::printf("%-16s %6s %8s %8s %8s\n", "system", "limit", "R-1", "R-2", "R-L");
  for (std::size_t s = 0; s < report.systems.size(); ++s) {
    for (std::size_t l = 0; l < report.limits.size(); ++l) {
      const RougeScores& m = report.means[s][l];
      std::printf("%-16s %6zu %8.4f %8.4f %8.4f\n", report.systems[s].c_str(),
                  report.limits[l], m.rouge1, m.rouge2, m.rougeL);
    }
  }
}

void run(const CLI::App& sub, const EvaluateOptions& o) {
  if (!o.names.empty() && o.names.size() != o.outputs.size()) {
    throw CliError("--names has " + std::to_string(o.names.size()) + " entries for " +
                   std::to_string(o.outputs.size()) + " --outputs");
  }
  std::vector<SystemOutputs> systems;
  for (std::size_t i = 0; i < o.outputs.size(); ++i) {
    const std::string name =
        o.names.empty() ? std::filesystem::path(o.outputs[i]).stem().string() : o.names[i];
    systems.push_back(read_system(o.outputs[i], name));
  }

  std::vector<std::vector<Tokens>> references;
  for (const std::string& path : o.references) {
    const auto lines = read_lines(path);
    if (references.empty()) references.resize(lines.size());
    if (lines.size() != references.size()) {
      throw CliError(path + ": " + std::to_string(lines.size()) + " references, expected " +
                     std::to_string(references.size()));
    }
    for (std::size_t d = 0; d < lines.size(); ++d) {
      const auto cols = split_tabs(lines[d]);
      references[d].push_back(split_tokens(cols.size() > 1 ? cols[1] : cols[0]));
    }
  }
  for (const auto& sys : systems) {
    if (sys.candidates.size() != references.size()) {
      throw CliError("system " + sys.name + " has " + std::to_string(sys.candidates.size()) +
                     " summaries but there are " + std::to_string(references.size()) +
                     " documents");
    }
  }

  EvalOptions options;
  options.permutation_iterations = o.iterations;
  options.seed = o.seed;
  options.workers = o.workers;
  options.bin_width = o.bin_width;
  const EvalReport report = evaluate(systems, references, o.limits, options);

  const std::filesystem::path out(o.out);
  ensure_parent(out);
  {
    std::ofstream json(out, std::ios::trunc);
    if (!json) throw CliError("cannot write " + o.out);
    json << report.to_json() << "\n";
  }
  std::filesystem::path lengths = o.lengths_csv;
  if (lengths.empty()) lengths = out.parent_path() / (out.stem().string() + ".lengths.csv");
  write_lengths_csv(lengths, report);

  nlohmann::ordered_json outputs;
  outputs["report"] = out.string();
  outputs["lengths_csv"] = lengths.string();
  outputs["documents"] = report.documents;
  write_manifest(o.out + ".manifest.json", "evaluate", sub, outputs);
  print_table(report);
}

}  // namespace

void register_evaluate(CLI::App& app) {
  auto o = std::make_shared<EvaluateOptions>();
  auto* sub = app.add_subcommand("evaluate", "ROUGE recall with pairwise significance");
  sub->add_option("--config", "key=value defaults file");
  sub->add_option("--outputs", o->outputs, "Decode outputs, comma separated")
      ->required()->delimiter(',')->take_all();
  sub->add_option("--names", o->names, "System names; default the file stems")
      ->delimiter(',')->take_all();
  sub->add_option("--references", o->references,
                  "Reference TSVs (target column); repeat for multiple references")
      ->required()->delimiter(',')->take_all();
  sub->add_option("--limits", o->limits, "Byte limits for candidate truncation")
      ->delimiter(',')->take_all()->capture_default_str();
  sub->add_option("--out", o->out)->capture_default_str();
  sub->add_option("--lengths-csv", o->lengths_csv, "Default <out stem>.lengths.csv");
  sub->add_option("--iterations", o->iterations, "Permutation samples when not exact")
      ->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--workers", o->workers)->capture_default_str();
  sub->add_option("--bin-width", o->bin_width)->capture_default_str();
  sub->callback([sub, o] { run(*sub, *o); });
}

}  // namespace lencon::cli
