#include "common.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace lencon::cli {

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    }
  }
  if (config && !args.empty()) {
    std::ifstream in(*config);
    if (!in) throw CliError("cannot read config file " + *config);
    std::vector<std::string> injected;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw CliError(*config + ": line " + std::to_string(number) +
                       ": expected key=value");
      }
      std::string key = line.substr(start, eq - start);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
      std::string value = line.substr(eq + 1);
      value.erase(0, value.find_first_not_of(" \t"));
      if (key == "config") continue;
      injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + 1, injected.begin(), injected.end());
  }
  std::reverse(args.begin(), args.end());
  return args;
}

nlohmann::ordered_json resolved_options(const CLI::App& sub) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr() || opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    const auto results = opt->reduced_results();
    if (!results.empty()) {
      out[key] = results.size() == 1 ? nlohmann::ordered_json(results.front())
                                     : nlohmann::ordered_json(results);
    } else {
      out[key] = opt->get_default_str();
    }
  }
  return out;
}

void ensure_parent(const std::filesystem::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const CLI::App& sub, const nlohmann::ordered_json& outputs) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["options"] = resolved_options(sub);
  m["outputs"] = outputs;
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw CliError("cannot write manifest " + path.string());
  out << m.dump(2) << "\n";
}

std::string format_logprob(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace lencon::cli
