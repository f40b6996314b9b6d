#pragma once

#include "spanemo/encoder.hpp"

namespace spanemo {

struct ToyEncoderConfig {
  std::size_t vocab_size = 0;
  int dim = 32;
  /// Half-width of the averaging window; a window at least as long as the
  /// sequence makes the context a global mean.
  int window = 64;
  bool position_embeddings = true;
  std::size_t max_length = 128;

  nlohmann::json to_json() const;
  static ToyEncoderConfig from_json(const nlohmann::json& j);
};

/// Small deterministic encoder for desk-scale runs:
///
///   x_t = E[token_t] + P[t] + S[segment_t]
///   m_t = mean of x_u over unmasked u with |u - t| <= window
///   h_t = tanh(A x_t + B m_t + c)
class ToyEncoder final : public Encoder {
 public:
  ToyEncoder(const ToyEncoderConfig& cfg, std::mt19937_64& rng);

  std::string kind() const override { return "toy"; }
  int hidden_width() const override { return cfg_.dim; }
  std::size_t max_length() const override { return cfg_.max_length; }

  Matrix encode(const ModelInput& input) const override;
  Matrix encode_train(const ModelInput& input, std::mt19937_64& rng,
                      std::unique_ptr<EncoderTape>& tape) const override;
  void backward(const EncoderTape& tape, const Matrix& d_hidden) override;

  ParamList parameters() override;
  using Encoder::parameters;
  nlohmann::json config() const override { return cfg_.to_json(); }

  const ToyEncoderConfig& cfg() const { return cfg_; }
  Param& embeddings() { return embeddings_; }
  Param& positions() { return positions_; }
  Param& segments() { return segments_; }
  Param& self_weight() { return self_weight_; }
  Param& context_weight() { return context_weight_; }
  Param& bias() { return bias_; }

 private:
  struct Tape;
  Matrix embed(const ModelInput& input) const;
  Matrix window_mean(const Matrix& x, const std::vector<int>& mask) const;
  Matrix forward(const ModelInput& input, Tape* tape) const;

  ToyEncoderConfig cfg_;
  Param embeddings_;      // V × D
  Param positions_;       // max_length × D
  Param segments_;        // 2 × D
  Param self_weight_;     // D × D
  Param context_weight_;  // D × D
  Param bias_;            // 1 × D
};

}  // namespace spanemo
