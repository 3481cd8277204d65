#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lencon/numerics/tensor.hpp"

namespace lencon {

enum class Variant { plain, len_emb, len_init };

std::string_view variant_name(Variant v);
// Accepts "plain", "lenemb", "leninit" (case-insensitive).
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::plain;
  std::size_t embed_dim = 100;
  std::size_t hidden_dim = 200;
  std::size_t len_embed_dim = 100;
  std::size_t length_types = 300;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Gate rows are stacked input, forget, output, candidate; each H wide.
struct LstmBlock {
  Parameter input;      // [4H x input_dim]
  Parameter recurrent;  // [4H x H]
  Parameter bias;       // [4H]
};

inline constexpr double kForgetGateBias = 1.0;
inline constexpr double kInitRange = 0.1;

class ModelParams {
 public:
  // Correctly shaped, zero-filled.
  explicit ModelParams(const ModelConfig& config);

  // Weights uniform in [-0.1, 0.1]; biases zero except the forget gates (1.0).
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }
  std::size_t decoder_input_dim() const;

  // Active parameters in checkpoint order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(std::string_view name);

  void zero_grad();

  Parameter src_embed;
  Parameter tgt_embed;
  LstmBlock fwd_lstm;
  LstmBlock bwd_lstm;
  LstmBlock dec_lstm;
  Parameter combine_weight;  // [H x 2H] over [h_t; context]
  Parameter combine_bias;    // [H]
  Parameter output_weight;   // [V_tgt x H]
  Parameter output_bias;     // [V_tgt]
  Parameter length_embed;    // [L_types x D_len], lenEmb only
  Parameter length_init;     // [H], lenInit only

 private:
  ModelConfig config_;
};

}  // namespace lencon
