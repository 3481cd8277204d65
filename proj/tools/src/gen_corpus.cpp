#include <fstream>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "lencon/data/length_stats.hpp"
#include "lencon/data/toy_corpus.hpp"

namespace lencon::cli {

namespace {

struct GenOptions {
  ToyCorpusConfig toy;
  std::string out;
};

void run(const CLI::App& sub, const GenOptions& o) {
  const ToyCorpus corpus = gen_toy_corpus(o.toy);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);

  const std::size_t n = corpus.pairs.size();
  const std::size_t held = n / 20;
  const std::size_t n_train = n - 2 * held;
  const std::span<const SentenceSummaryPair> all(corpus.pairs);
  save_corpus(dir / "train.tsv", all.subspan(0, n_train));
  save_corpus(dir / "valid.tsv", all.subspan(n_train, held));
  save_corpus(dir / "test.tsv", all.subspan(n_train + held, held));

  std::ofstream stats(dir / "stats.csv");
  if (!stats) throw CliError("cannot write " + (dir / "stats.csv").string());
  write_length_stats_csv(stats, target_length_stats(all));

  nlohmann::ordered_json outputs;
  outputs["train"] = {{"path", (dir / "train.tsv").string()}, {"pairs", n_train}};
  outputs["valid"] = {{"path", (dir / "valid.tsv").string()}, {"pairs", held}};
  outputs["test"] = {{"path", (dir / "test.tsv").string()}, {"pairs", held}};
  outputs["stats"] = (dir / "stats.csv").string();
  outputs["flagged_pairs"] = corpus.flagged.size();
  write_manifest(dir / "manifest.json", "gen-corpus", sub, outputs);
  std::cout << "wrote " << n_train << "/" << held << "/" << held
            << " train/valid/test pairs to " << dir.string() << "\n";
}

}  // namespace

void register_gen_corpus(CLI::App& app) {
  auto opts = std::make_shared<GenOptions>();
  opts->toy.size = 5000;
  auto* sub = app.add_subcommand("gen-corpus", "Generate a prefix-truncation toy corpus");
  sub->add_option("--config", "key=value defaults file");
  sub->add_option("--size", opts->toy.size, "Total pairs (split 90/5/5)")->capture_default_str();
  sub->add_option("--seed", opts->toy.seed)->capture_default_str();
  sub->add_option("--out", opts->out, "Output directory")->required();
  sub->add_option("--vocab-size", opts->toy.vocab_size, "Including 3 reserved tokens")
      ->capture_default_str();
  sub->add_option("--min-src", opts->toy.min_source_len)->capture_default_str();
  sub->add_option("--max-src", opts->toy.max_source_len)->capture_default_str();
  sub->add_option("--min-budget", opts->toy.min_budget)->capture_default_str();
  sub->add_option("--max-budget", opts->toy.max_budget)->capture_default_str();
  sub->callback([sub, opts] { run(*sub, *opts); });
}

}  // namespace lencon::cli
