#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace lencon::cli {

// Raised for file/input problems the user can fix; printed without a trace.
class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inserts `--key=value` lines from the subcommand's --config file right after
// the subcommand name, so later command-line flags win. Returns the argument
// list in CLI11's reversed order.
std::vector<std::string> expand_config(int argc, char** argv);

// The resolved value of every option of a subcommand, defaults included.
nlohmann::ordered_json resolved_options(const CLI::App& sub);

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const CLI::App& sub, const nlohmann::ordered_json& outputs);

void ensure_parent(const std::filesystem::path& path);

std::string format_logprob(double v);

void register_gen_corpus(CLI::App& app);
void register_train(CLI::App& app);
void register_decode(CLI::App& app);
void register_evaluate(CLI::App& app);

}  // namespace lencon::cli
