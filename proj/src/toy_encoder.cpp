#include "spanemo/toy_encoder.hpp"

#include <algorithm>
#include <cmath>

#include "spanemo/error.hpp"

namespace spanemo {
namespace {

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

std::vector<const Param*> Encoder::parameters() const {
  auto list = const_cast<Encoder*>(this)->parameters();
  return {list.begin(), list.end()};
}

nlohmann::json ToyEncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"dim", dim},
          {"window", window},
          {"position_embeddings", position_embeddings},
          {"max_length", max_length}};
}

ToyEncoderConfig ToyEncoderConfig::from_json(const nlohmann::json& j) {
  ToyEncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dim = j.at("dim").get<int>();
  c.window = j.at("window").get<int>();
  c.position_embeddings = j.at("position_embeddings").get<bool>();
  c.max_length = j.at("max_length").get<std::size_t>();
  return c;
}

struct ToyEncoder::Tape : EncoderTape {
  std::vector<int> token_ids, segment_ids, mask;
  Matrix x, m, h;
};

ToyEncoder::ToyEncoder(const ToyEncoderConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  if (cfg_.vocab_size == 0 || cfg_.dim <= 0 || cfg_.window < 0 || cfg_.max_length == 0)
    throw UsageError("invalid toy encoder configuration");
  const auto v = static_cast<Eigen::Index>(cfg_.vocab_size);
  const auto d = static_cast<Eigen::Index>(cfg_.dim);
  embeddings_ = Param("embeddings", random_normal(v, d, 0.5, rng));
  positions_ = Param("positions", cfg_.position_embeddings
                                      ? random_normal(static_cast<Eigen::Index>(cfg_.max_length), d, 0.1, rng)
                                      : Matrix::Zero(static_cast<Eigen::Index>(cfg_.max_length), d));
  segments_ = Param("segments", random_normal(2, d, 0.1, rng));
  self_weight_ = Param("self_weight", xavier(d, d, rng));
  context_weight_ = Param("context_weight", xavier(d, d, rng));
  bias_ = Param("bias", Matrix::Zero(1, d));
}

ParamList ToyEncoder::parameters() {
  ParamList list{&embeddings_};
  if (cfg_.position_embeddings) list.push_back(&positions_);
  list.insert(list.end(), {&segments_, &self_weight_, &context_weight_, &bias_});
  return list;
}

Matrix ToyEncoder::embed(const ModelInput& input) const {
  const auto t_len = static_cast<Eigen::Index>(input.length());
  if (input.length() > cfg_.max_length)
    throw InputTooLongError("sequence longer than the toy encoder's maximum length");
  Matrix x(t_len, cfg_.dim);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const int tok = input.token_ids[static_cast<std::size_t>(t)];
    const int seg = input.segment_ids[static_cast<std::size_t>(t)];
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg_.vocab_size)
      throw DimensionError("token id outside the toy encoder's vocabulary");
    if (seg < 0 || seg > 1) throw DimensionError("segment id must be 0 or 1");
    x.row(t) = embeddings_.value.row(tok) + segments_.value.row(seg);
    if (cfg_.position_embeddings) x.row(t) += positions_.value.row(t);
  }
  return x;
}

Matrix ToyEncoder::window_mean(const Matrix& x, const std::vector<int>& mask) const {
  const Eigen::Index t_len = x.rows();
  // prefix sums over masked rows
  Matrix prefix = Matrix::Zero(t_len + 1, x.cols());
  std::vector<double> count(static_cast<std::size_t>(t_len) + 1, 0.0);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const bool on = mask[static_cast<std::size_t>(t)] != 0;
    prefix.row(t + 1) = prefix.row(t);
    if (on) prefix.row(t + 1) += x.row(t);
    count[static_cast<std::size_t>(t) + 1] = count[static_cast<std::size_t>(t)] + (on ? 1.0 : 0.0);
  }
  Matrix m(t_len, x.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - cfg_.window);
    const Eigen::Index hi = std::min<Eigen::Index>(t_len - 1, t + cfg_.window);
    const double n = count[static_cast<std::size_t>(hi) + 1] - count[static_cast<std::size_t>(lo)];
    if (n > 0)
      m.row(t) = (prefix.row(hi + 1) - prefix.row(lo)) / n;
    else
      m.row(t).setZero();
  }
  return m;
}

Matrix ToyEncoder::forward(const ModelInput& input, Tape* tape) const {
  if (input.segment_ids.size() != input.length() || input.attention_mask.size() != input.length())
    throw DimensionError("model input sequences have different lengths");
  Matrix x = embed(input);
  Matrix m = window_mean(x, input.attention_mask);
  Matrix pre = x * self_weight_.value.transpose() + m * context_weight_.value.transpose();
  pre.rowwise() += bias_.value.row(0);
  Matrix h = pre.array().tanh().matrix();
  if (tape) {
    tape->token_ids = input.token_ids;
    tape->segment_ids = input.segment_ids;
    tape->mask = input.attention_mask;
    tape->x = std::move(x);
    tape->m = std::move(m);
    tape->h = h;
  }
  return h;
}

Matrix ToyEncoder::encode(const ModelInput& input) const { return forward(input, nullptr); }

Matrix ToyEncoder::encode_train(const ModelInput& input, std::mt19937_64&,
                                std::unique_ptr<EncoderTape>& tape) const {
  auto t = std::make_unique<Tape>();
  Matrix h = forward(input, t.get());
  tape = std::move(t);
  return h;
}

void ToyEncoder::backward(const EncoderTape& base, const Matrix& d_hidden) {
  const auto& tape = dynamic_cast<const Tape&>(base);
  const Eigen::Index t_len = tape.h.rows();
  if (d_hidden.rows() != t_len || d_hidden.cols() != cfg_.dim)
    throw DimensionError("hidden gradient shape mismatch");

  Matrix d_pre = (d_hidden.array() * (1.0 - tape.h.array().square())).matrix();
  self_weight_.grad += d_pre.transpose() * tape.x;
  context_weight_.grad += d_pre.transpose() * tape.m;
  bias_.grad.row(0) += d_pre.colwise().sum();

  Matrix d_x = d_pre * self_weight_.value;
  const Matrix d_m = d_pre * context_weight_.value;

  // m_t averages x_u over its window, so x_u receives d_m_t / n_t from every
  // window that contains it.
  std::vector<double> count(static_cast<std::size_t>(t_len) + 1, 0.0);
  for (Eigen::Index t = 0; t < t_len; ++t)
    count[static_cast<std::size_t>(t) + 1] = count[static_cast<std::size_t>(t)] + (tape.mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0);
  Matrix scaled(t_len, d_m.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - cfg_.window);
    const Eigen::Index hi = std::min<Eigen::Index>(t_len - 1, t + cfg_.window);
    const double n = count[static_cast<std::size_t>(hi) + 1] - count[static_cast<std::size_t>(lo)];
    scaled.row(t) = n > 0 ? RowVector(d_m.row(t) / n) : RowVector::Zero(d_m.cols());
  }
  Matrix prefix = Matrix::Zero(t_len + 1, d_m.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) prefix.row(t + 1) = prefix.row(t) + scaled.row(t);
  for (Eigen::Index u = 0; u < t_len; ++u) {
    if (!tape.mask[static_cast<std::size_t>(u)]) continue;
    const Eigen::Index lo = std::max<Eigen::Index>(0, u - cfg_.window);
    const Eigen::Index hi = std::min<Eigen::Index>(t_len - 1, u + cfg_.window);
    d_x.row(u) += prefix.row(hi + 1) - prefix.row(lo);
  }

  for (Eigen::Index t = 0; t < t_len; ++t) {
    embeddings_.grad.row(tape.token_ids[static_cast<std::size_t>(t)]) += d_x.row(t);
    segments_.grad.row(tape.segment_ids[static_cast<std::size_t>(t)]) += d_x.row(t);
    if (cfg_.position_embeddings) positions_.grad.row(t) += d_x.row(t);
  }
}

}  // namespace spanemo
