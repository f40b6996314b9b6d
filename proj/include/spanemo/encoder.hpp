#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "spanemo/tensor.hpp"

namespace spanemo {

/// A sentence word after subword splitting: pieces [begin, end) of the
/// assembled sequence.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string word;
};

/// Assembled encoder input.
///
/// With the label segment: `[CLS] <label pieces...> [SEP] <sentence pieces...>`,
/// segment 0 up to and including [SEP], segment 1 afterwards, and one entry in
/// `label_positions` per label (its first piece). Without it (sentence-only
/// ablation): `[CLS] <sentence pieces...> [SEP]`, all segment 0, no label
/// positions.
struct ModelInput {
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  std::vector<std::size_t> label_positions;
  std::vector<int> attention_mask;
  std::vector<WordSpan> word_spans;

  std::size_t length() const { return token_ids.size(); }
  bool has_label_segment() const { return !label_positions.empty(); }
};

/// Opaque per-call record of intermediate values, produced by a training-mode
/// encode and consumed by backward.
struct EncoderTape {
  virtual ~EncoderTape() = default;
};

/// Uniform contract for the toy encoder and the pretrained transformer.
/// encode() is const and safe to call concurrently; backward() accumulates
/// into the parameters' gradients.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string kind() const = 0;
  virtual int hidden_width() const = 0;
  virtual std::size_t max_length() const = 0;

  /// Eval mode, returns T×D hidden states.
  virtual Matrix encode(const ModelInput& input) const = 0;

  /// Training mode: any internal dropout draws from `rng`.
  virtual Matrix encode_train(const ModelInput& input, std::mt19937_64& rng,
                              std::unique_ptr<EncoderTape>& tape) const = 0;

  virtual void backward(const EncoderTape& tape, const Matrix& d_hidden) = 0;

  virtual ParamList parameters() = 0;
  std::vector<const Param*> parameters() const;

  /// Architecture description stored in checkpoint metadata.
  virtual nlohmann::json config() const = 0;
};

}  // namespace spanemo
