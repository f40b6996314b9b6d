#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spanemo/dataset.hpp"
#include "spanemo/encoder.hpp"
#include "spanemo/label_space.hpp"
#include "spanemo/wordpiece.hpp"

namespace spanemo {

/// Sequence layout used by the model.
enum class HeadKind {
  span,  // label segment + per-token scoring, read at label positions
  cls,   // sentence only, [CLS]-pooled |C|-way head
};

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& text);

/// Token-scoring head: score_t = p · tanh(W h_t + b).
struct HeadParameters {
  Param weight;    // D × D
  Param bias;      // 1 × D
  Param position;  // 1 × D

  static HeadParameters zeros(int width);
  static HeadParameters random(int width, std::mt19937_64& rng);
  int width() const { return static_cast<int>(position.value.cols()); }
};

/// Sentence-only head: ŷ = sigmoid(Q tanh(W h_[CLS] + b) + c).
struct ClsHeadParameters {
  Param weight;    // D × D
  Param bias;      // 1 × D
  Param out;       // C × D
  Param out_bias;  // 1 × C

  static ClsHeadParameters random(int width, std::size_t classes, std::mt19937_64& rng);
};

/// Scores every row of `hidden`. Throws DimensionError on width mismatch.
Vector score_tokens(const Matrix& hidden, const HeadParameters& head);

/// `[CLS] labels [SEP] sentence`. Sentence pieces past `max_length` are
/// dropped; throws InputTooLongError when the label segment alone does not fit
/// and UsageError when a label surface token has no vocabulary piece.
ModelInput assemble_input(const LabelSpace& space, const std::vector<std::string>& tokens,
                          const WordPieceVocab& vocab, std::size_t max_length = 128);

/// `[CLS] sentence [SEP]`, used by the sentence-only ablation.
ModelInput assemble_sentence_input(const std::vector<std::string>& tokens,
                                   const WordPieceVocab& vocab, std::size_t max_length = 128);

/// bit i = 1 iff probs[i] > threshold. Throws UsageError unless 0 < threshold < 1.
LabelVector predict(const ProbabilityVector& probs, double threshold = 0.5);

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Encoder + head + the label space and vocabulary that define its inputs.
class SpanModel {
 public:
  SpanModel(LabelSpace space, WordPieceVocab vocab, std::unique_ptr<Encoder> encoder,
            HeadKind head_kind, std::mt19937_64& init_rng);

  SpanModel(SpanModel&&) noexcept = default;
  SpanModel& operator=(SpanModel&&) noexcept = default;

  const LabelSpace& space() const { return space_; }
  const WordPieceVocab& vocab() const { return vocab_; }
  const Encoder& encoder() const { return *encoder_; }
  Encoder& encoder() { return *encoder_; }
  HeadKind head_kind() const { return head_kind_; }
  HeadParameters& span_head() { return span_head_; }
  const HeadParameters& span_head() const { return span_head_; }
  ClsHeadParameters& cls_head() { return cls_head_; }

  /// Assembles according to the head kind.
  ModelInput assemble(const std::vector<std::string>& tokens) const;

  /// Eval-mode prediction vector, length |C|.
  ProbabilityVector forward(const Example& example) const;
  ProbabilityVector forward(const std::vector<std::string>& tokens) const;
  ProbabilityVector forward(const ModelInput& input) const;

  /// Eval-mode hidden states for an assembled input.
  Matrix hidden_states(const ModelInput& input) const { return encoder_->encode(input); }

  /// Training-mode pass with the head dropout; keep it for backward().
  struct TrainPass {
    ModelInput input;
    std::unique_ptr<EncoderTape> encoder_tape;
    Matrix hidden;      // T × D
    Matrix activation;  // rows used by the head: tanh(W h + b), pre-dropout
    Matrix keep_mask;   // dropout multipliers (0 or 1/(1-p)), same shape
    std::vector<double> probs;
  };
  TrainPass forward_train(const Example& example, std::mt19937_64& rng, double dropout) const;

  /// Back-propagates dL/dŷ, accumulating gradients in head and encoder.
  void backward(const TrainPass& pass, const std::vector<double>& d_probs);

  ParamList encoder_parameters() { return encoder_->parameters(); }
  ParamList head_parameters();
  std::vector<const Param*> head_parameters() const;
  void zero_grad();

  /// Sets every head parameter to zero (ŷ = 0.5 everywhere for the span head).
  void zero_head();

 private:
  LabelSpace space_;
  WordPieceVocab vocab_;
  std::unique_ptr<Encoder> encoder_;
  HeadKind head_kind_;
  HeadParameters span_head_;
  ClsHeadParameters cls_head_;
};

}  // namespace spanemo
