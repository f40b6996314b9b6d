#pragma once

#include <filesystem>
#include <map>

#include "spanemo/encoder.hpp"
#include "spanemo/wordpiece.hpp"

namespace spanemo {

/// BERT-style encoder configuration; field names follow HF config.json.
struct TransformerConfig {
  std::size_t vocab_size = 0;
  int hidden_size = 768;
  int num_hidden_layers = 12;
  int num_attention_heads = 12;
  int intermediate_size = 3072;
  std::size_t max_position_embeddings = 512;
  int type_vocab_size = 2;
  double layer_norm_eps = 1e-12;
  double hidden_dropout_prob = 0.1;
  double attention_probs_dropout_prob = 0.1;

  nlohmann::json to_json() const;
  static TransformerConfig from_json(const nlohmann::json& j);
};

/// Post-LayerNorm bidirectional transformer (BERT layout, GELU activation).
/// Runs in double precision on CPU.
class TransformerEncoder final : public Encoder {
 public:
  /// Random initialization (N(0, 0.02) weights, zero biases, unit LayerNorm).
  TransformerEncoder(const TransformerConfig& cfg, std::mt19937_64& rng,
                     std::size_t max_length = 128);

  /// Loads config.json + model.safetensors from a HF-style checkpoint
  /// directory. Accepts names with or without the "bert." prefix and legacy
  /// LayerNorm gamma/beta names.
  static std::unique_ptr<TransformerEncoder> from_pretrained(const std::filesystem::path& dir,
                                                             std::size_t max_length = 128);

  std::string kind() const override { return "transformer"; }
  int hidden_width() const override { return cfg_.hidden_size; }
  std::size_t max_length() const override { return max_length_; }

  Matrix encode(const ModelInput& input) const override;
  Matrix encode_train(const ModelInput& input, std::mt19937_64& rng,
                      std::unique_ptr<EncoderTape>& tape) const override;
  void backward(const EncoderTape& tape, const Matrix& d_hidden) override;

  ParamList parameters() override;
  using Encoder::parameters;
  nlohmann::json config() const override;

  const TransformerConfig& cfg() const { return cfg_; }

  /// Loads weights by HF parameter name into the matching parameters.
  /// Returns the names that were not found in `tensors`.
  std::vector<std::string> load_weights(const std::map<std::string, Matrix>& tensors);

 private:
  struct Linear {
    Param weight;  // out × in
    Param bias;    // 1 × out
  };
  struct LayerNorm {
    Param gamma;  // 1 × D
    Param beta;   // 1 × D
  };
  struct Layer {
    Linear query, key, value, attn_out;
    LayerNorm attn_norm;
    Linear intermediate, output;
    LayerNorm out_norm;
  };
  struct Tape;
  struct LayerTape;
  struct NormTape;

  Matrix forward(const ModelInput& input, std::mt19937_64* rng, Tape* tape) const;
  Matrix layer_norm(const Matrix& x, const LayerNorm& ln, NormTape* tape) const;
  Matrix layer_norm_backward(const Matrix& dy, LayerNorm& ln, const NormTape& tape);

  TransformerConfig cfg_;
  std::size_t max_length_;
  Param word_embeddings_, position_embeddings_, token_type_embeddings_;
  LayerNorm embed_norm_;
  std::vector<Layer> layers_;
};

/// Resolves a local checkpoint directory or a registry id. Ids are looked up
/// under $SPANEMO_CACHE (e.g. "bert-base-uncased" ->
/// "$SPANEMO_CACHE/bert-base-uncased"). Throws UsageError if nothing matches.
std::filesystem::path resolve_checkpoint(const std::string& path_or_id);

/// Default encoder id per language tag.
std::string default_encoder_id(const std::string& language);

}  // namespace spanemo
