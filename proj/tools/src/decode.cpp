#include <fstream>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "lencon/data/corpus.hpp"
#include "lencon/decoding/beam_search.hpp"
#include "lencon/model/checkpoint.hpp"

namespace lencon::cli {

namespace {

struct DecodeOptions {
  std::string model;
  std::string input;
  std::string out = "summaries.tsv";
  std::string method = "free";
  std::optional<std::size_t> length;
  std::size_t min = 0;
  std::optional<std::size_t> max;
  bool hard = false;
  std::optional<std::size_t> beam;
  std::size_t workers = 1;
};

std::vector<std::vector<std::string>> read_sources(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot read " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tokens = split_tokens(line.substr(0, line.find('\t')));
    if (tokens.empty()) {
      throw CliError(path + ": line " + std::to_string(number) + ": empty source");
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

void run(const CLI::App& sub, const DecodeOptions& o) {
  const std::filesystem::path model_path(o.model);
  const ModelParams params = load_checkpoint(model_path);
  const Vocabulary src = Vocabulary::load(o.model + ".src.vocab");
  const Vocabulary tgt = Vocabulary::load(o.model + ".tgt.vocab");
  if (src.size() != params.config().src_vocab || tgt.size() != params.config().tgt_vocab) {
    throw CliError(o.model + ": vocabulary files do not match the checkpoint");
  }
  const std::vector<std::size_t> token_bytes = tgt.token_bytes();
  const bool plain = params.variant() == Variant::plain;

  std::optional<std::size_t> model_length = o.length;
  DecodeConstraint constraint;
  std::size_t beam = o.beam.value_or(kDefaultBeam);
  if (o.method == "free") {
    constraint = DecodeConstraint::free_search(beam);
  } else if (o.method == "fixlen") {
    if (!o.length) throw CliError("--method fixlen needs --length");
    constraint = DecodeConstraint::fix_len(*o.length, beam);
  } else if (o.method == "fixrng") {
    beam = o.beam.value_or(kDefaultRangeBeam);
    constraint = DecodeConstraint::fix_rng(o.min, o.max, beam);
    if (!model_length) model_length = o.max;
  } else {
    if (plain) throw CliError("--method learned needs a lenemb or leninit model");
    if (!o.length) throw CliError("--method learned needs --length");
  }
  if (!plain && !model_length) {
    throw CliError(std::string(variant_name(params.variant())) +
                   " model needs --length (or --max with fixrng)");
  }
  if (o.method != "learned") constraint.validate();

  const auto sources = read_sources(o.input);
  std::vector<std::vector<TokenId>> ids;
  ids.reserve(sources.size());
  for (const auto& s : sources) ids.push_back(src.encode(s));

  const auto results = decode_parallel(ids.size(), o.workers, [&](std::size_t i) {
    if (o.method == "learned") {
      return decode_learned(params, token_bytes, ids[i], *o.length, o.hard, beam);
    }
    return beam_search(params, token_bytes, ids[i], constraint,
                       plain ? std::nullopt : model_length);
  });

  std::string desired = "free";
  if (o.length) {
    desired = std::to_string(*o.length);
  } else if (o.method == "fixrng" && o.max) {
    desired = std::to_string(*o.max);
  }

  const std::filesystem::path out_path(o.out);
  ensure_parent(out_path);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw CliError("cannot write " + o.out);
  std::size_t capped = 0;
  std::size_t overflow = 0;
  for (const DecodeResult& r : results) {
    const BeamHypothesis& best = r.best();
    const auto words = tgt.decode(best.content());
    out << desired << '\t' << byte_length(words) << '\t' << format_logprob(best.logprob)
        << '\t' << join_tokens(words) << '\n';
    capped += r.report.step_cap_reached;
    overflow += r.report.first_word_overflow;
  }
  out.close();
  if (!out) throw CliError("failed writing " + o.out);

  nlohmann::ordered_json outputs;
  outputs["summaries"] = out_path.string();
  outputs["documents"] = results.size();
  outputs["variant"] = std::string(variant_name(params.variant()));
  outputs["step_cap_reached"] = capped;
  outputs["first_word_overflow"] = overflow;
  write_manifest(o.out + ".manifest.json", "decode", sub, outputs);
  std::cout << "decoded " << results.size() << " sentences to " << o.out << "\n";
}

}  // namespace

void register_decode(CLI::App& app) {
  auto o = std::make_shared<DecodeOptions>();
  auto* sub = app.add_subcommand("decode", "Summarize sentences with beam search");
  sub->add_option("--config", "key=value defaults file");
  sub->add_option("--model", o->model, "Checkpoint from train")->required();
  sub->add_option("--input", o->input, "TSV or plain text; the source is before any TAB")
      ->required();
  sub->add_option("--out", o->out)->capture_default_str();
  sub->add_option("--method", o->method, "free, fixlen, fixrng or learned")
      ->transform(CLI::IsMember({"free", "fixlen", "fixrng", "learned"}, CLI::ignore_case))
      ->capture_default_str();
  sub->add_option("--length", o->length, "Desired byte length");
  sub->add_option("--min", o->min, "fixrng lower bound")->capture_default_str();
  sub->add_option("--max", o->max, "fixrng upper bound");
  sub->add_flag("--hard", o->hard, "learned: also bound the output to --length bytes");
  sub->add_option("--beam", o->beam, "Default 10, or 30 for fixrng");
  sub->add_option("--workers", o->workers)->capture_default_str();
  sub->callback([sub, o] { run(*sub, *o); });
}

}  // namespace lencon::cli
