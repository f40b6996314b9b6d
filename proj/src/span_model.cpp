#include "spanemo/span_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "spanemo/error.hpp"

namespace spanemo {
namespace {

Matrix xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix dropout_keep(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return Matrix::Ones(rows, cols);
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

void append_sentence(const std::vector<std::string>& tokens, const WordPieceVocab& vocab,
                     std::size_t max_length, std::size_t reserve_tail, int segment, ModelInput& in) {
  for (const auto& word : tokens) {
    if (in.length() + reserve_tail >= max_length) break;
    auto pieces = vocab.tokenize_word(word);
    const std::size_t room = max_length - reserve_tail - in.length();
    if (pieces.size() > room) pieces.resize(room);
    if (pieces.empty()) continue;
    WordSpan span{in.length(), in.length() + pieces.size(), word};
    for (int id : pieces) {
      in.token_ids.push_back(id);
      in.segment_ids.push_back(segment);
    }
    in.word_spans.push_back(std::move(span));
  }
}

}  // namespace

std::string to_string(HeadKind kind) { return kind == HeadKind::span ? "span" : "cls"; }

HeadKind parse_head_kind(const std::string& text) {
  if (text == "span") return HeadKind::span;
  if (text == "cls") return HeadKind::cls;
  throw UsageError("unknown head kind: " + text);
}

HeadParameters HeadParameters::zeros(int width) {
  return {Param("head.weight", Matrix::Zero(width, width)), Param("head.bias", Matrix::Zero(1, width)),
          Param("head.position", Matrix::Zero(1, width))};
}

HeadParameters HeadParameters::random(int width, std::mt19937_64& rng) {
  auto head = zeros(width);
  head.weight.value = xavier(width, width, rng);
  head.position.value = xavier(1, width, rng);
  return head;
}

ClsHeadParameters ClsHeadParameters::random(int width, std::size_t classes, std::mt19937_64& rng) {
  const auto c = static_cast<Eigen::Index>(classes);
  return {Param("head.weight", xavier(width, width, rng)), Param("head.bias", Matrix::Zero(1, width)),
          Param("head.out", xavier(c, width, rng)), Param("head.out_bias", Matrix::Zero(1, c))};
}

Vector score_tokens(const Matrix& hidden, const HeadParameters& head) {
  const auto d = head.position.value.cols();
  if (hidden.cols() != d || head.weight.value.rows() != d || head.weight.value.cols() != d ||
      head.bias.value.cols() != d)
    throw DimensionError(fmt::format("hidden width {} does not match head width {}", hidden.cols(), d));
  Matrix pre = hidden * head.weight.value.transpose();
  pre.rowwise() += head.bias.value.row(0);
  return pre.array().tanh().matrix() * head.position.value.row(0).transpose();
}

ModelInput assemble_input(const LabelSpace& space, const std::vector<std::string>& tokens,
                          const WordPieceVocab& vocab, std::size_t max_length) {
  ModelInput in;
  in.token_ids.push_back(vocab.cls_id());
  in.segment_ids.push_back(0);
  for (const auto& surface : space.surface_tokens()) {
    auto pieces = vocab.tokenize_word(surface);
    if (pieces.empty() || (pieces.size() == 1 && pieces[0] == vocab.unk_id() && surface != WordPieceVocab::kUnk))
      throw UsageError("label token '" + surface + "' has no vocabulary piece");
    in.label_positions.push_back(in.length());
    for (int id : pieces) {
      in.token_ids.push_back(id);
      in.segment_ids.push_back(0);
    }
  }
  in.token_ids.push_back(vocab.sep_id());
  in.segment_ids.push_back(0);
  if (in.length() > max_length)
    throw InputTooLongError(fmt::format("label segment needs {} positions, maximum length is {}", in.length(),
                                        max_length));
  append_sentence(tokens, vocab, max_length, 0, 1, in);
  in.attention_mask.assign(in.length(), 1);
  return in;
}

ModelInput assemble_sentence_input(const std::vector<std::string>& tokens, const WordPieceVocab& vocab,
                                   std::size_t max_length) {
  if (max_length < 2) throw InputTooLongError("maximum length must fit [CLS] and [SEP]");
  ModelInput in;
  in.token_ids.push_back(vocab.cls_id());
  in.segment_ids.push_back(0);
  append_sentence(tokens, vocab, max_length, 1, 0, in);
  in.token_ids.push_back(vocab.sep_id());
  in.segment_ids.push_back(0);
  in.attention_mask.assign(in.length(), 1);
  return in;
}

LabelVector predict(const ProbabilityVector& probs, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must lie in (0,1)");
  LabelVector out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out.set(i, probs[i] > threshold);
  return out;
}

SpanModel::SpanModel(LabelSpace space, WordPieceVocab vocab, std::unique_ptr<Encoder> encoder,
                     HeadKind head_kind, std::mt19937_64& init_rng)
    : space_(std::move(space)), vocab_(std::move(vocab)), encoder_(std::move(encoder)), head_kind_(head_kind) {
  if (!encoder_) throw UsageError("model needs an encoder");
  const int d = encoder_->hidden_width();
  if (head_kind_ == HeadKind::span)
    span_head_ = HeadParameters::random(d, init_rng);
  else
    cls_head_ = ClsHeadParameters::random(d, space_.size(), init_rng);
}

ModelInput SpanModel::assemble(const std::vector<std::string>& tokens) const {
  return head_kind_ == HeadKind::span ? assemble_input(space_, tokens, vocab_, encoder_->max_length())
                                      : assemble_sentence_input(tokens, vocab_, encoder_->max_length());
}

ProbabilityVector SpanModel::forward(const Example& example) const { return forward(example.tokens); }

ProbabilityVector SpanModel::forward(const std::vector<std::string>& tokens) const { return forward(assemble(tokens)); }

ProbabilityVector SpanModel::forward(const ModelInput& input) const {
  const Matrix hidden = encoder_->encode(input);
  std::vector<double> probs(space_.size());
  if (head_kind_ == HeadKind::span) {
    if (input.label_positions.size() != space_.size())
      throw DimensionError("input has no label segment matching the label space");
    const Vector scores = score_tokens(hidden, span_head_);
    for (std::size_t i = 0; i < probs.size(); ++i)
      probs[i] = sigmoid(scores(static_cast<Eigen::Index>(input.label_positions[i])));
  } else {
    RowVector z = hidden.row(0) * cls_head_.weight.value.transpose() + cls_head_.bias.value.row(0);
    z = z.array().tanh().matrix();
    const RowVector logits = z * cls_head_.out.value.transpose() + cls_head_.out_bias.value.row(0);
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = sigmoid(logits(static_cast<Eigen::Index>(i)));
  }
  return ProbabilityVector(std::move(probs));
}

SpanModel::TrainPass SpanModel::forward_train(const Example& example, std::mt19937_64& rng, double dropout) const {
  TrainPass pass;
  pass.input = assemble(example.tokens);
  pass.hidden = encoder_->encode_train(pass.input, rng, pass.encoder_tape);
  const auto c = static_cast<Eigen::Index>(space_.size());
  pass.probs.resize(space_.size());
  if (head_kind_ == HeadKind::span) {
    const int d = span_head_.width();
    Matrix rows(c, d);
    for (Eigen::Index i = 0; i < c; ++i) rows.row(i) = pass.hidden.row(static_cast<Eigen::Index>(pass.input.label_positions[static_cast<std::size_t>(i)]));
    Matrix pre = rows * span_head_.weight.value.transpose();
    pre.rowwise() += span_head_.bias.value.row(0);
    pass.activation = pre.array().tanh().matrix();
    pass.keep_mask = dropout_keep(c, d, dropout, rng);
    const Vector scores = (pass.activation.array() * pass.keep_mask.array()).matrix() * span_head_.position.value.row(0).transpose();
    for (Eigen::Index i = 0; i < c; ++i) pass.probs[static_cast<std::size_t>(i)] = sigmoid(scores(i));
  } else {
    const auto d = cls_head_.weight.value.cols();
    Matrix pre = pass.hidden.row(0) * cls_head_.weight.value.transpose() + cls_head_.bias.value.row(0);
    pass.activation = pre.array().tanh().matrix();
    pass.keep_mask = dropout_keep(1, d, dropout, rng);
    const RowVector logits = (pass.activation.array() * pass.keep_mask.array()).matrix() * cls_head_.out.value.transpose() +
                             cls_head_.out_bias.value;
    for (Eigen::Index i = 0; i < c; ++i) pass.probs[static_cast<std::size_t>(i)] = sigmoid(logits(i));
  }
  return pass;
}

void SpanModel::backward(const TrainPass& pass, const std::vector<double>& d_probs) {
  if (d_probs.size() != space_.size()) throw DimensionError("probability gradient has wrong length");
  const auto c = static_cast<Eigen::Index>(space_.size());
  Vector d_logit(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    const double p = pass.probs[static_cast<std::size_t>(i)];
    d_logit(i) = d_probs[static_cast<std::size_t>(i)] * p * (1.0 - p);
  }
  const Matrix dropped = (pass.activation.array() * pass.keep_mask.array()).matrix();
  Matrix d_hidden = Matrix::Zero(pass.hidden.rows(), pass.hidden.cols());

  if (head_kind_ == HeadKind::span) {
    span_head_.position.grad.row(0) += (dropped.transpose() * d_logit).transpose();
    Matrix d_act = d_logit * span_head_.position.value.row(0);
    d_act.array() *= pass.keep_mask.array();
    const Matrix d_pre = (d_act.array() * (1.0 - pass.activation.array().square())).matrix();
    Matrix rows(c, pass.hidden.cols());
    for (Eigen::Index i = 0; i < c; ++i) rows.row(i) = pass.hidden.row(static_cast<Eigen::Index>(pass.input.label_positions[static_cast<std::size_t>(i)]));
    span_head_.weight.grad += d_pre.transpose() * rows;
    span_head_.bias.grad.row(0) += d_pre.colwise().sum();
    const Matrix d_rows = d_pre * span_head_.weight.value;
    for (Eigen::Index i = 0; i < c; ++i)
      d_hidden.row(static_cast<Eigen::Index>(pass.input.label_positions[static_cast<std::size_t>(i)])) += d_rows.row(i);
  } else {
    const RowVector d_logits = d_logit.transpose();
    cls_head_.out.grad += d_logits.transpose() * dropped;
    cls_head_.out_bias.grad += d_logits;
    Matrix d_act = d_logits * cls_head_.out.value;
    d_act.array() *= pass.keep_mask.array();
    const Matrix d_pre = (d_act.array() * (1.0 - pass.activation.array().square())).matrix();
    cls_head_.weight.grad += d_pre.transpose() * pass.hidden.row(0);
    cls_head_.bias.grad += d_pre;
    d_hidden.row(0) += d_pre * cls_head_.weight.value;
  }
  encoder_->backward(*pass.encoder_tape, d_hidden);
}

ParamList SpanModel::head_parameters() {
  if (head_kind_ == HeadKind::span) return {&span_head_.weight, &span_head_.bias, &span_head_.position};
  return {&cls_head_.weight, &cls_head_.bias, &cls_head_.out, &cls_head_.out_bias};
}

std::vector<const Param*> SpanModel::head_parameters() const {
  auto list = const_cast<SpanModel*>(this)->head_parameters();
  return {list.begin(), list.end()};
}

void SpanModel::zero_grad() {
  for (Param* p : encoder_->parameters()) p->zero_grad();
  for (Param* p : head_parameters()) p->zero_grad();
}

void SpanModel::zero_head() {
  for (Param* p : head_parameters()) p->value.setZero();
}

}  // namespace spanemo
