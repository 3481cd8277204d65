#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "common.hpp"
#include "lencon/data/corpus.hpp"
#include "lencon/model/checkpoint.hpp"
#include "lencon/training/trainer.hpp"

namespace lencon::cli {

namespace {

struct TrainOptions {
  std::string variant = "plain";
  std::string corpus;
  std::string out = "model.ckpt";
  std::size_t updates = 1000;
  std::uint64_t seed = 1;
  std::size_t batch = 80;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip = 5.0;
  std::size_t pool = 800000;
  std::size_t regroup = 10000;
  std::size_t embed = 100;
  std::size_t hidden = 200;
  std::size_t len_embed = 100;
  std::size_t length_types = 300;
  std::size_t max_src_vocab = 0;
  std::size_t max_tgt_vocab = 0;
  std::size_t checkpoint_every = 0;
  std::string resume;
  std::string loss_curve;
  std::size_t log_every = 100;
};

std::filesystem::path sidecar(const std::filesystem::path& ckpt, const char* ext) {
  return ckpt.string() + ext;
}

void check_dim(const CLI::App& sub, const char* flag, std::size_t asked,
               std::size_t stored, const std::string& where) {
  if (sub.count(flag) && asked != stored) {
    throw CliError(where + ": " + flag + " " + std::to_string(asked) +
                   " differs from the checkpoint value " + std::to_string(stored));
  }
}

// Loss-curve rows written by the interrupted run, up to and including `step`.
std::vector<LossRecord> previous_curve(const std::filesystem::path& path,
                                       std::uint64_t step) {
  std::vector<LossRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    LossRecord r{std::stoul(line.substr(0, comma)), std::stod(line.substr(comma + 1))};
    if (r.update <= step) out.push_back(r);
  }
  return out;
}

void save_curve(const std::filesystem::path& path, std::span<const LossRecord> rows) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CliError("cannot write " + path.string());
  write_loss_curve(out, rows);
}

void run(const CLI::App& sub, const TrainOptions& o) {
  const Variant variant = parse_variant(o.variant);
  const LoadedCorpus loaded = load_corpus(o.corpus);
  for (const auto& w : loaded.warnings) std::cerr << "lencon: warning: " << w << "\n";
  if (loaded.pairs.empty()) throw CliError(o.corpus + ": no training pairs");
  const std::size_t max_src = o.max_src_vocab ? o.max_src_vocab : SIZE_MAX;
  const std::size_t max_tgt = o.max_tgt_vocab ? o.max_tgt_vocab : SIZE_MAX;
  auto [src_vocab, tgt_vocab] = build_vocab(loaded.pairs, max_src, max_tgt);
  const std::vector<EncodedPair> encoded =
      encode_corpus(loaded.pairs, src_vocab, tgt_vocab);

  const std::filesystem::path out(o.out);
  const std::filesystem::path curve_path =
      o.loss_curve.empty() ? std::filesystem::path(o.out + ".loss.csv")
                           : std::filesystem::path(o.loss_curve);

  std::optional<ModelParams> params;
  AdamState state;
  std::vector<LossRecord> curve;
  if (!o.resume.empty()) {
    const std::filesystem::path from(o.resume);
    params.emplace(load_checkpoint(from, variant));
    const ModelConfig& c = params->config();
    check_dim(sub, "--embed", o.embed, c.embed_dim, o.resume);
    check_dim(sub, "--hidden", o.hidden, c.hidden_dim, o.resume);
    check_dim(sub, "--len-embed", o.len_embed, c.len_embed_dim, o.resume);
    check_dim(sub, "--length-types", o.length_types, c.length_types, o.resume);
    if (!(Vocabulary::load(sidecar(from, ".src.vocab")) == src_vocab) ||
        !(Vocabulary::load(sidecar(from, ".tgt.vocab")) == tgt_vocab)) {
      throw CliError(o.resume + ": vocabulary rebuilt from " + o.corpus +
                     " does not match the checkpoint's vocabulary files");
    }
    state = load_adam_state(*params, sidecar(from, ".opt"));
    if (state.step > o.updates) {
      throw CliError(o.resume + ": checkpoint is at update " + std::to_string(state.step) +
                     ", past --updates " + std::to_string(o.updates));
    }
    curve = previous_curve(curve_path, state.step);
    std::cerr << "resuming from update " << state.step << "\n";
  } else {
    ModelConfig config;
    config.variant = variant;
    config.embed_dim = o.embed;
    config.hidden_dim = o.hidden;
    config.len_embed_dim = o.len_embed;
    config.length_types = o.length_types;
    config.src_vocab = src_vocab.size();
    config.tgt_vocab = tgt_vocab.size();
    config.validate();
    params.emplace(ModelParams::initialize(config, o.seed));
  }

  TrainConfig cfg;
  cfg.batching.batch_size = o.batch;
  cfg.batching.sample_pool = o.pool;
  cfg.batching.regroup_every = o.regroup;
  cfg.adam = {o.lr, o.beta1, o.beta2, o.adam_eps};
  cfg.max_updates = o.updates;
  cfg.seed = o.seed;
  cfg.clip_norm = o.clip;
  cfg.validate();

  ensure_parent(out);
  src_vocab.save(sidecar(out, ".src.vocab"));
  tgt_vocab.save(sidecar(out, ".tgt.vocab"));

  TrainHooks hooks;
  hooks.checkpoint_every = o.checkpoint_every;
  hooks.on_update = [&](const LossRecord& r) {
    curve.push_back(r);
    if (o.log_every && r.update % o.log_every == 0) {
      std::cerr << "update " << r.update << " loss " << r.loss << "\n";
    }
  };
  bool saved = false;
  hooks.on_checkpoint = [&](const ModelParams& p, const AdamState& s) {
    saved = true;
    save_checkpoint(p, out);
    save_adam_state(s, p, sidecar(out, ".opt"));
    save_curve(curve_path, curve);
  };
  train(*params, encoded, cfg, state, hooks);
  // a resume that was already complete still writes its outputs
  if (!saved) hooks.on_checkpoint(*params, state);

  nlohmann::ordered_json outputs;
  outputs["checkpoint"] = out.string();
  outputs["optimizer"] = sidecar(out, ".opt").string();
  outputs["src_vocab"] = {{"path", sidecar(out, ".src.vocab").string()},
                          {"size", src_vocab.size()}};
  outputs["tgt_vocab"] = {{"path", sidecar(out, ".tgt.vocab").string()},
                          {"size", tgt_vocab.size()}};
  outputs["loss_curve"] = curve_path.string();
  outputs["updates"] = state.step;
  if (!curve.empty()) outputs["final_loss"] = curve.back().loss;
  write_manifest(out.string() + ".manifest.json", "train", sub, outputs);
  std::cout << out.string() << "\n";
}

}  // namespace

void register_train(CLI::App& app) {
  auto o = std::make_shared<TrainOptions>();
  auto* sub = app.add_subcommand("train", "Train a model with Adam");
  sub->add_option("--config", "key=value defaults file");
  sub->add_option("--variant", o->variant, "plain, lenemb or leninit")
      ->transform(CLI::IsMember({"plain", "lenemb", "leninit"}, CLI::ignore_case))
      ->capture_default_str();
  sub->add_option("--corpus", o->corpus, "Training TSV")->required();
  sub->add_option("--out", o->out, "Checkpoint path")->capture_default_str();
  sub->add_option("--updates", o->updates, "Total Adam updates")->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--batch", o->batch)->capture_default_str();
  sub->add_option("--lr", o->lr)->capture_default_str();
  sub->add_option("--beta1", o->beta1)->capture_default_str();
  sub->add_option("--beta2", o->beta2)->capture_default_str();
  sub->add_option("--adam-eps", o->adam_eps)->capture_default_str();
  sub->add_option("--clip", o->clip, "Global gradient-norm clip, 0 disables")
      ->capture_default_str();
  sub->add_option("--pool", o->pool, "Pairs sampled per regrouping")->capture_default_str();
  sub->add_option("--regroup", o->regroup, "Batches per regrouping")->capture_default_str();
  sub->add_option("--embed", o->embed)->capture_default_str();
  sub->add_option("--hidden", o->hidden)->capture_default_str();
  sub->add_option("--len-embed", o->len_embed)->capture_default_str();
  sub->add_option("--length-types", o->length_types)->capture_default_str();
  sub->add_option("--max-src-vocab", o->max_src_vocab, "0 keeps every token")
      ->capture_default_str();
  sub->add_option("--max-tgt-vocab", o->max_tgt_vocab, "0 keeps every token")
      ->capture_default_str();
  sub->add_option("--checkpoint-every", o->checkpoint_every)->capture_default_str();
  sub->add_option("--resume", o->resume, "Checkpoint to continue from");
  sub->add_option("--loss-curve", o->loss_curve, "Default <out>.loss.csv");
  sub->add_option("--log-every", o->log_every)->capture_default_str();
  sub->callback([sub, o] { run(*sub, *o); });
}

}  // namespace lencon::cli
