#include "spanemo/transformer_encoder.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "spanemo/error.hpp"
#include "spanemo/safetensors.hpp"

namespace spanemo {
namespace {

constexpr double kMaskedScore = -10000.0;

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Inverted-dropout multipliers; empty when p == 0.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return {};
  std::bernoulli_distribution keep(1.0 - p);
  Matrix m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

}  // namespace

nlohmann::json TransformerConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"hidden_size", hidden_size},
          {"num_hidden_layers", num_hidden_layers},
          {"num_attention_heads", num_attention_heads},
          {"intermediate_size", intermediate_size},
          {"max_position_embeddings", max_position_embeddings},
          {"type_vocab_size", type_vocab_size},
          {"layer_norm_eps", layer_norm_eps},
          {"hidden_dropout_prob", hidden_dropout_prob},
          {"attention_probs_dropout_prob", attention_probs_dropout_prob}};
}

TransformerConfig TransformerConfig::from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_hidden_layers = j.value("num_hidden_layers", c.num_hidden_layers);
  c.num_attention_heads = j.value("num_attention_heads", c.num_attention_heads);
  c.intermediate_size = j.value("intermediate_size", c.intermediate_size);
  c.max_position_embeddings = j.value("max_position_embeddings", c.max_position_embeddings);
  c.type_vocab_size = j.value("type_vocab_size", c.type_vocab_size);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  c.hidden_dropout_prob = j.value("hidden_dropout_prob", c.hidden_dropout_prob);
  c.attention_probs_dropout_prob = j.value("attention_probs_dropout_prob", c.attention_probs_dropout_prob);
  if (auto act = j.value("hidden_act", std::string("gelu")); act != "gelu")
    throw UsageError("unsupported hidden_act " + act + " (only gelu)");
  return c;
}

struct TransformerEncoder::NormTape {
  Matrix normalized;   // x̂
  Vector inv_std;      // per row
};

struct TransformerEncoder::LayerTape {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;       // per head, pre-dropout
  std::vector<Matrix> probs_keep;  // per head dropout multipliers
  Matrix context;
  Matrix attn_keep;
  NormTape attn_norm;
  Matrix attn_normed;
  Matrix inter_pre;
  Matrix inter_act;
  Matrix out_keep;
  NormTape out_norm;
};

struct TransformerEncoder::Tape : EncoderTape {
  std::vector<int> token_ids, segment_ids, mask;
  NormTape embed_norm;
  Matrix embed_keep;
  std::vector<LayerTape> layers;
};

TransformerEncoder::TransformerEncoder(const TransformerConfig& cfg, std::mt19937_64& rng,
                                       std::size_t max_length)
    : cfg_(cfg), max_length_(max_length) {
  if (cfg_.vocab_size == 0 || cfg_.hidden_size <= 0 || cfg_.num_attention_heads <= 0 ||
      cfg_.hidden_size % cfg_.num_attention_heads != 0 || cfg_.type_vocab_size < 2)
    throw UsageError("invalid transformer configuration");
  if (max_length_ > cfg_.max_position_embeddings)
    throw UsageError("max_length exceeds the encoder's position embeddings");
  const auto d = static_cast<Eigen::Index>(cfg_.hidden_size);
  const auto inter = static_cast<Eigen::Index>(cfg_.intermediate_size);
  constexpr double sd = 0.02;
  auto linear = [&](const std::string& name, Eigen::Index out, Eigen::Index in) {
    return Linear{Param(name + ".weight", random_normal(out, in, sd, rng)),
                  Param(name + ".bias", Matrix::Zero(1, out))};
  };
  auto norm = [&](const std::string& name) {
    return LayerNorm{Param(name + ".weight", Matrix::Ones(1, d)), Param(name + ".bias", Matrix::Zero(1, d))};
  };
  word_embeddings_ = Param("embeddings.word_embeddings.weight",
                           random_normal(static_cast<Eigen::Index>(cfg_.vocab_size), d, sd, rng));
  position_embeddings_ = Param("embeddings.position_embeddings.weight",
                               random_normal(static_cast<Eigen::Index>(cfg_.max_position_embeddings), d, sd, rng));
  token_type_embeddings_ = Param("embeddings.token_type_embeddings.weight",
                                 random_normal(cfg_.type_vocab_size, d, sd, rng));
  embed_norm_ = norm("embeddings.LayerNorm");
  for (int l = 0; l < cfg_.num_hidden_layers; ++l) {
    const auto p = fmt::format("encoder.layer.{}.", l);
    layers_.push_back(Layer{linear(p + "attention.self.query", d, d), linear(p + "attention.self.key", d, d),
                            linear(p + "attention.self.value", d, d), linear(p + "attention.output.dense", d, d),
                            norm(p + "attention.output.LayerNorm"), linear(p + "intermediate.dense", inter, d),
                            linear(p + "output.dense", d, inter), norm(p + "output.LayerNorm")});
  }
}

ParamList TransformerEncoder::parameters() {
  ParamList list{&word_embeddings_, &position_embeddings_, &token_type_embeddings_, &embed_norm_.gamma,
                 &embed_norm_.beta};
  for (auto& layer : layers_) {
    for (Linear* lin : {&layer.query, &layer.key, &layer.value, &layer.attn_out}) {
      list.push_back(&lin->weight);
      list.push_back(&lin->bias);
    }
    list.push_back(&layer.attn_norm.gamma);
    list.push_back(&layer.attn_norm.beta);
    for (Linear* lin : {&layer.intermediate, &layer.output}) {
      list.push_back(&lin->weight);
      list.push_back(&lin->bias);
    }
    list.push_back(&layer.out_norm.gamma);
    list.push_back(&layer.out_norm.beta);
  }
  return list;
}

nlohmann::json TransformerEncoder::config() const {
  auto j = cfg_.to_json();
  j["max_length"] = max_length_;
  return j;
}

std::vector<std::string> TransformerEncoder::load_weights(const std::map<std::string, Matrix>& tensors) {
  std::vector<std::string> missing;
  for (Param* p : parameters()) {
    std::vector<std::string> candidates{p->name, "bert." + p->name};
    // legacy TF-converted names
    if (p->name.find("LayerNorm.weight") != std::string::npos || p->name.find("LayerNorm.bias") != std::string::npos) {
      std::string legacy = p->name;
      auto pos = legacy.rfind(".weight");
      if (pos != std::string::npos && pos + 7 == legacy.size())
        legacy.replace(pos, 7, ".gamma");
      else
        legacy.replace(legacy.rfind(".bias"), 5, ".beta");
      candidates.push_back(legacy);
      candidates.push_back("bert." + legacy);
    }
    bool found = false;
    for (const auto& name : candidates) {
      auto it = tensors.find(name);
      if (it == tensors.end()) continue;
      if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
        throw DimensionError(fmt::format("tensor {} has shape {}x{}, expected {}x{}", name, it->second.rows(),
                                         it->second.cols(), p->value.rows(), p->value.cols()));
      p->value = it->second;
      found = true;
      break;
    }
    if (!found) missing.push_back(p->name);
  }
  return missing;
}

std::unique_ptr<TransformerEncoder> TransformerEncoder::from_pretrained(const std::filesystem::path& dir,
                                                                        std::size_t max_length) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw UsageError("no config.json in " + dir.string());
  auto cfg = TransformerConfig::from_json(nlohmann::json::parse(cfg_in));
  const auto weights = dir / "model.safetensors";
  if (!std::filesystem::exists(weights))
    throw UsageError("no model.safetensors in " + dir.string() + " (convert PyTorch .bin checkpoints first)");
  std::mt19937_64 rng(0);
  auto enc = std::make_unique<TransformerEncoder>(cfg, rng, max_length);
  auto missing = enc->load_weights(safetensors::load(weights));
  if (!missing.empty())
    throw ParseError(fmt::format("{}: missing tensors: {}", weights.string(), fmt::join(missing, ", ")));
  return enc;
}

Matrix TransformerEncoder::layer_norm(const Matrix& x, const LayerNorm& ln, NormTape* tape) const {
  const double d = static_cast<double>(x.cols());
  Matrix xhat(x.rows(), x.cols());
  Vector inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const RowVector centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / d;
    inv_std(r) = 1.0 / std::sqrt(var + cfg_.layer_norm_eps);
    xhat.row(r) = centered * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * ln.gamma.value.row(0).array()).matrix();
  y.rowwise() += ln.beta.value.row(0);
  if (tape) {
    tape->normalized = std::move(xhat);
    tape->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix TransformerEncoder::layer_norm_backward(const Matrix& dy, LayerNorm& ln, const NormTape& tape) {
  const auto& xhat = tape.normalized;
  ln.gamma.grad.row(0) += (dy.array() * xhat.array()).matrix().colwise().sum();
  ln.beta.grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = (dy.array().rowwise() * ln.gamma.value.row(0).array()).matrix();
  const double d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_dxhat = dxhat.row(r).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(r).dot(xhat.row(r)) / d;
    dx.row(r) = tape.inv_std(r) * (dxhat.row(r).array() - mean_dxhat - xhat.row(r).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

Matrix TransformerEncoder::forward(const ModelInput& input, std::mt19937_64* rng, Tape* tape) const {
  const auto t_len = static_cast<Eigen::Index>(input.length());
  if (input.length() > max_length_) throw InputTooLongError("sequence longer than the encoder's maximum length");
  if (input.segment_ids.size() != input.length() || input.attention_mask.size() != input.length())
    throw DimensionError("model input sequences have different lengths");
  const Eigen::Index d = cfg_.hidden_size;
  const int heads = cfg_.num_attention_heads;
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool train = rng != nullptr;

  Matrix x(t_len, d);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const int tok = input.token_ids[static_cast<std::size_t>(t)];
    const int seg = input.segment_ids[static_cast<std::size_t>(t)];
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg_.vocab_size) throw DimensionError("token id out of range");
    if (seg < 0 || seg >= cfg_.type_vocab_size) throw DimensionError("segment id out of range");
    x.row(t) = word_embeddings_.value.row(tok) + position_embeddings_.value.row(t) +
               token_type_embeddings_.value.row(seg);
  }
  RowVector mask_add(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t)
    mask_add(t) = input.attention_mask[static_cast<std::size_t>(t)] ? 0.0 : kMaskedScore;

  x = layer_norm(x, embed_norm_, tape ? &tape->embed_norm : nullptr);
  if (train) {
    Matrix keep = dropout_mask(t_len, d, cfg_.hidden_dropout_prob, *rng);
    apply_mask(x, keep);
    if (tape) tape->embed_keep = std::move(keep);
  }

  auto linear = [](const Matrix& in, const Linear& lin) {
    Matrix y = in * lin.weight.value.transpose();
    y.rowwise() += lin.bias.value.row(0);
    return y;
  };

  for (const auto& layer : layers_) {
    LayerTape lt;
    Matrix q = linear(x, layer.query), k = linear(x, layer.key), v = linear(x, layer.value);
    Matrix context(t_len, d);
    for (int h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * dh, dh);
      Matrix scores = (q(Eigen::all, cols) * k(Eigen::all, cols).transpose()) * scale;
      scores.rowwise() += mask_add;
      for (Eigen::Index r = 0; r < t_len; ++r) {
        const double mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      Matrix used = scores;
      Matrix keep;
      if (train) {
        keep = dropout_mask(t_len, t_len, cfg_.attention_probs_dropout_prob, *rng);
        apply_mask(used, keep);
      }
      context(Eigen::all, cols) = used * v(Eigen::all, cols);
      if (tape) {
        lt.probs.push_back(std::move(scores));
        lt.probs_keep.push_back(std::move(keep));
      }
    }
    Matrix attn = linear(context, layer.attn_out);
    if (train) {
      lt.attn_keep = dropout_mask(t_len, d, cfg_.hidden_dropout_prob, *rng);
      apply_mask(attn, lt.attn_keep);
    }
    Matrix y1 = layer_norm(attn + x, layer.attn_norm, tape ? &lt.attn_norm : nullptr);
    Matrix inter_pre = linear(y1, layer.intermediate);
    Matrix inter_act = inter_pre.unaryExpr([](double z) { return gelu(z); });
    Matrix out = linear(inter_act, layer.output);
    if (train) {
      lt.out_keep = dropout_mask(t_len, d, cfg_.hidden_dropout_prob, *rng);
      apply_mask(out, lt.out_keep);
    }
    Matrix y2 = layer_norm(out + y1, layer.out_norm, tape ? &lt.out_norm : nullptr);
    if (tape) {
      lt.input = std::move(x);
      lt.q = std::move(q);
      lt.k = std::move(k);
      lt.v = std::move(v);
      lt.context = std::move(context);
      lt.attn_normed = y1;
      lt.inter_pre = std::move(inter_pre);
      lt.inter_act = std::move(inter_act);
      tape->layers.push_back(std::move(lt));
    }
    x = std::move(y2);
  }
  return x;
}

Matrix TransformerEncoder::encode(const ModelInput& input) const { return forward(input, nullptr, nullptr); }

Matrix TransformerEncoder::encode_train(const ModelInput& input, std::mt19937_64& rng,
                                        std::unique_ptr<EncoderTape>& tape) const {
  auto t = std::make_unique<Tape>();
  t->token_ids = input.token_ids;
  t->segment_ids = input.segment_ids;
  t->mask = input.attention_mask;
  Matrix h = forward(input, &rng, t.get());
  tape = std::move(t);
  return h;
}

void TransformerEncoder::backward(const EncoderTape& base, const Matrix& d_hidden) {
  const auto& tape = dynamic_cast<const Tape&>(base);
  const Eigen::Index t_len = static_cast<Eigen::Index>(tape.token_ids.size());
  const Eigen::Index d = cfg_.hidden_size;
  if (d_hidden.rows() != t_len || d_hidden.cols() != d) throw DimensionError("hidden gradient shape mismatch");
  const int heads = cfg_.num_attention_heads;
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto linear_backward = [](const Matrix& dy, const Matrix& in, Linear& lin) {
    lin.weight.grad += dy.transpose() * in;
    lin.bias.grad.row(0) += dy.colwise().sum();
    return Matrix(dy * lin.weight.value);
  };

  Matrix dx = d_hidden;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    auto& layer = layers_[li];
    const auto& lt = tape.layers[li];

    // y2 = LN(dropout(out) + y1)
    Matrix d_sum2 = layer_norm_backward(dx, layer.out_norm, lt.out_norm);
    Matrix d_out = d_sum2;
    apply_mask(d_out, lt.out_keep);
    Matrix d_inter_act = linear_backward(d_out, lt.inter_act, layer.output);
    Matrix d_inter_pre = (d_inter_act.array() * lt.inter_pre.unaryExpr([](double z) { return gelu_grad(z); }).array()).matrix();
    Matrix d_y1 = linear_backward(d_inter_pre, lt.attn_normed, layer.intermediate) + d_sum2;

    // y1 = LN(dropout(attn) + x)
    Matrix d_sum1 = layer_norm_backward(d_y1, layer.attn_norm, lt.attn_norm);
    Matrix d_attn = d_sum1;
    apply_mask(d_attn, lt.attn_keep);
    Matrix d_context = linear_backward(d_attn, lt.context, layer.attn_out);

    Matrix dq(t_len, d), dk(t_len, d), dv(t_len, d);
    for (int h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * dh, dh);
      const Matrix& probs = lt.probs[static_cast<std::size_t>(h)];
      const Matrix& keep = lt.probs_keep[static_cast<std::size_t>(h)];
      Matrix used = probs;
      apply_mask(used, keep);
      const Matrix d_ctx_h = d_context(Eigen::all, cols);
      dv(Eigen::all, cols) = used.transpose() * d_ctx_h;
      Matrix d_used = d_ctx_h * lt.v(Eigen::all, cols).transpose();
      apply_mask(d_used, keep);
      // softmax backward
      Matrix d_scores(t_len, t_len);
      for (Eigen::Index r = 0; r < t_len; ++r) {
        const double dot = d_used.row(r).dot(probs.row(r));
        d_scores.row(r) = (probs.row(r).array() * (d_used.row(r).array() - dot)).matrix();
      }
      d_scores *= scale;
      dq(Eigen::all, cols) = d_scores * lt.k(Eigen::all, cols);
      dk(Eigen::all, cols) = d_scores.transpose() * lt.q(Eigen::all, cols);
    }
    Matrix d_in = d_sum1;
    d_in += linear_backward(dq, lt.input, layer.query);
    d_in += linear_backward(dk, lt.input, layer.key);
    d_in += linear_backward(dv, lt.input, layer.value);
    dx = std::move(d_in);
  }

  apply_mask(dx, tape.embed_keep);
  Matrix d_emb = layer_norm_backward(dx, embed_norm_, tape.embed_norm);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    word_embeddings_.grad.row(tape.token_ids[static_cast<std::size_t>(t)]) += d_emb.row(t);
    position_embeddings_.grad.row(t) += d_emb.row(t);
    token_type_embeddings_.grad.row(tape.segment_ids[static_cast<std::size_t>(t)]) += d_emb.row(t);
  }
}

std::filesystem::path resolve_checkpoint(const std::string& path_or_id) {
  std::filesystem::path direct(path_or_id);
  if (std::filesystem::is_directory(direct)) return direct;
  if (const char* cache = std::getenv("SPANEMO_CACHE")) {
    auto candidate = std::filesystem::path(cache) / path_or_id;
    if (std::filesystem::is_directory(candidate)) return candidate;
  }
  throw UsageError("encoder checkpoint not found: " + path_or_id +
                   " (give a local directory or place it under $SPANEMO_CACHE)");
}

std::string default_encoder_id(const std::string& language) {
  if (language == "english") return "bert-base-uncased";
  if (language == "arabic") return "asafaya/bert-base-arabic";
  if (language == "spanish") return "dccuchile/bert-base-spanish-wwm-uncased";
  throw UsageError("unknown language: " + language);
}

}  // namespace spanemo
