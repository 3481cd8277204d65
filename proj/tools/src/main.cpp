#include <iostream>

#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Length-controllable encoder-decoder toolkit", "lencon"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  lencon::cli::register_gen_corpus(app);
  lencon::cli::register_train(app);
  lencon::cli::register_decode(app);
  lencon::cli::register_evaluate(app);

  std::vector<std::string> args;
  try {
    args = lencon::cli::expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "lencon: error: " << e.what() << "\n";
    return 2;
  }
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "lencon: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
