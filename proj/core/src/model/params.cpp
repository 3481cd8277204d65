#include "lencon/model/params.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <stdexcept>

namespace lencon {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::plain:
      return "plain";
    case Variant::len_emb:
      return "lenemb";
    case Variant::len_init:
      return "leninit";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "plain") return Variant::plain;
  if (lower == "lenemb") return Variant::len_emb;
  if (lower == "leninit") return Variant::len_init;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected plain, lenemb or leninit)");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("model: embedding and hidden sizes must be positive");
  }
  if (src_vocab <= 3 || tgt_vocab <= 3) {
    throw std::invalid_argument("model: vocabularies must hold content tokens");
  }
  if (variant == Variant::len_emb && (len_embed_dim == 0 || length_types == 0)) {
    throw std::invalid_argument("model: lenemb needs positive D_len and L_types");
  }
}

namespace {

LstmBlock make_block(const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden) {
  return LstmBlock{
      Parameter(prefix + ".input", Tensor({4 * hidden, input_dim})),
      Parameter(prefix + ".recurrent", Tensor({4 * hidden, hidden})),
      Parameter(prefix + ".bias", Tensor({4 * hidden})),
  };
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t E = config_.embed_dim;
  const std::size_t H = config_.hidden_dim;
  src_embed = Parameter("src_embed", Tensor({config_.src_vocab, E}));
  tgt_embed = Parameter("tgt_embed", Tensor({config_.tgt_vocab, E}));
  fwd_lstm = make_block("fwd_lstm", E, H);
  bwd_lstm = make_block("bwd_lstm", E, H);
  dec_lstm = make_block("dec_lstm", decoder_input_dim(), H);
  combine_weight = Parameter("combine.weight", Tensor({H, 2 * H}));
  combine_bias = Parameter("combine.bias", Tensor({H}));
  output_weight = Parameter("output.weight", Tensor({config_.tgt_vocab, H}));
  output_bias = Parameter("output.bias", Tensor({config_.tgt_vocab}));
  if (config_.variant == Variant::len_emb) {
    length_embed = Parameter("length_embed",
                             Tensor({config_.length_types, config_.len_embed_dim}));
  }
  if (config_.variant == Variant::len_init) {
    length_init = Parameter("length_init", Tensor({H}));
  }
}

std::size_t ModelParams::decoder_input_dim() const {
  std::size_t dim = config_.embed_dim + config_.hidden_dim;
  if (config_.variant == Variant::len_emb) dim += config_.len_embed_dim;
  return dim;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-kInitRange, kInitRange);
  auto fill = [&](Parameter& p) {
    for (double& v : p.value.values()) v = uniform(rng);
  };
  fill(params.src_embed);
  fill(params.tgt_embed);
  const std::size_t H = config.hidden_dim;
  for (LstmBlock* block : {&params.fwd_lstm, &params.bwd_lstm, &params.dec_lstm}) {
    fill(block->input);
    fill(block->recurrent);
    for (std::size_t i = H; i < 2 * H; ++i) block->bias.value[i] = kForgetGateBias;
  }
  fill(params.combine_weight);
  fill(params.output_weight);
  if (config.variant == Variant::len_emb) fill(params.length_embed);
  return params;
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out = {&src_embed, &tgt_embed};
  for (LstmBlock* block : {&fwd_lstm, &bwd_lstm, &dec_lstm}) {
    out.push_back(&block->input);
    out.push_back(&block->recurrent);
    out.push_back(&block->bias);
  }
  out.insert(out.end(), {&combine_weight, &combine_bias, &output_weight, &output_bias});
  if (config_.variant == Variant::len_emb) out.push_back(&length_embed);
  if (config_.variant == Variant::len_init) out.push_back(&length_init);
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  auto mut = const_cast<ModelParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

Parameter* ModelParams::find(std::string_view name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void ModelParams::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace lencon
