// Shared helpers for the unit and acceptance tests: random generators,
// reference implementations written independently of the library, and
// small model/corpus builders.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "spanemo/dataset.hpp"
#include "spanemo/label_space.hpp"
#include "spanemo/span_model.hpp"
#include "spanemo/toy_encoder.hpp"

namespace spanemo::testing {

inline std::filesystem::path data_dir() { return SPANEMO_TEST_DATA; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spanemo_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

  LabelVector labels(std::size_t c, double p = 0.4) {
    LabelVector y(c);
    for (std::size_t i = 0; i < c; ++i) y.set(i, coin(p));
    return y;
  }
  std::vector<double> probs(std::size_t c, double lo = 0.0, double hi = 1.0) {
    std::vector<double> out(c);
    for (auto& v : out) v = real(lo, hi);
    return out;
  }
  Matrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = real(-scale, scale);
    return m;
  }
};

// ---- reference implementations ------------------------------------------

inline double lca_oracle(const LabelVector& y, const std::vector<double>& p) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < y.size(); ++a) {
    if (y.test(a)) continue;
    for (std::size_t b = 0; b < y.size(); ++b) {
      if (!y.test(b)) continue;
      sum += std::exp(p[a] - p[b]);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

inline double bce_oracle(const LabelVector& y, const std::vector<double>& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::min(std::max(p[i], 1e-7), 1.0 - 1e-7);
    sum += y.test(i) ? -std::log(q) : -std::log(1.0 - q);
  }
  return sum / static_cast<double>(y.size());
}

struct CountingScores {
  double micro = 0.0, macro = 0.0, jaccard = 0.0;
};

// Cell-by-cell counts with plain loops.
inline CountingScores metrics_oracle(const std::vector<LabelVector>& gold, const std::vector<LabelVector>& pred) {
  const std::size_t c = gold.front().size();
  std::vector<long> tp(c, 0), fp(c, 0), fn(c, 0);
  double jac = 0.0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < c; ++i) {
      const bool g = gold[n].test(i), p = pred[n].test(i);
      if (g && p) ++tp[i];
      if (!g && p) ++fp[i];
      if (g && !p) ++fn[i];
      if (g && p) ++inter;
      if (g || p) ++uni;
    }
    jac += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  long TP = 0, FP = 0, FN = 0;
  double macro = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    TP += tp[i];
    FP += fp[i];
    FN += fn[i];
    const long denom = 2 * tp[i] + fp[i] + fn[i];
    macro += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[i]) / static_cast<double>(denom);
  }
  CountingScores s;
  const long denom = 2 * TP + FP + FN;
  s.micro = denom == 0 ? 0.0 : 2.0 * static_cast<double>(TP) / static_cast<double>(denom);
  s.macro = macro / static_cast<double>(c);
  s.jaccard = jac / static_cast<double>(gold.size());
  return s;
}

// Textbook Pearson on two columns; NaN when either is constant.
inline double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  const double num = n * sab - sa * sb;
  const double den = std::sqrt(n * saa - sa * sa) * std::sqrt(n * sbb - sb * sb);
  if (den == 0.0) return std::nan("");
  return num / den;
}

// score_t = Σ_k p_k tanh(Σ_j W_kj h_tj + b_k), one scalar at a time.
inline std::vector<double> score_oracle(const Matrix& h, const Matrix& w, const Matrix& b, const Matrix& p) {
  std::vector<double> out;
  for (Eigen::Index t = 0; t < h.rows(); ++t) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      double z = b(0, k);
      for (Eigen::Index j = 0; j < w.cols(); ++j) z += w(k, j) * h(t, j);
      s += p(0, k) * std::tanh(z);
    }
    out.push_back(s);
  }
  return out;
}

inline double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// ---- builders -------------------------------------------------------------

inline LabelSpace small_space() { return LabelSpace({"anger", "joy", "optimism", "sadness"}); }

inline SpanModel toy_model(const LabelSpace& space, const std::vector<std::string>& words, std::uint64_t seed,
                           int dim = 8, int window = 64, bool positions = true, HeadKind head = HeadKind::span) {
  std::vector<std::string> all(space.surface_tokens());
  all.insert(all.end(), words.begin(), words.end());
  auto vocab = WordPieceVocab::from_words(all);
  ToyEncoderConfig cfg;
  cfg.vocab_size = vocab.size();
  cfg.dim = dim;
  cfg.window = window;
  cfg.position_embeddings = positions;
  std::mt19937_64 rng(seed);
  auto encoder = std::make_unique<ToyEncoder>(cfg, rng);
  return SpanModel(space, std::move(vocab), std::move(encoder), head, rng);
}

inline Example make_example(const std::string& id, const std::vector<std::string>& tokens, const LabelVector& y) {
  Example ex;
  ex.id = id;
  for (std::size_t i = 0; i < tokens.size(); ++i) ex.raw_text += (i ? " " : "") + tokens[i];
  ex.tokens = tokens;
  ex.labels = y;
  return ex;
}

// 32 examples over the 11-class space. Every label owns one trigger token that
// appears iff the label is gold; filler tokens carry no signal. Four examples
// are neutral.
inline Dataset trigger_corpus(std::uint64_t seed = 3) {
  Dataset d;
  d.space = default_semeval_space();
  const std::vector<std::string> filler{"the", "a", "today", "just", "so", "really", "this", "that"};
  Gen gen(seed);
  const std::size_t c = d.space.size();
  for (int n = 0; n < 32; ++n) {
    LabelVector y(c);
    if (n >= 4) {
      const int k = 1 + n % 3;
      while (static_cast<int>(y.count()) < k) y.set(static_cast<std::size_t>(gen.integer(0, static_cast<int>(c) - 1)), true);
    }
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < c; ++i)
      if (y.test(i)) tokens.push_back("trig_" + d.space.name(i));
    for (int f = gen.integer(1, 3); f > 0; --f)
      tokens.insert(tokens.begin() + gen.integer(0, static_cast<int>(tokens.size())),
                    filler[static_cast<std::size_t>(gen.integer(0, static_cast<int>(filler.size()) - 1))]);
    d.examples.push_back(make_example("ov" + std::to_string(n), tokens, y));
  }
  return d;
}

// Largest relative error between backward() and central differences of
// L = Σ G ⊙ encode(input) over up to `per_param` entries of every parameter.
// `seed` fixes the training-mode randomness so both sides see the same masks.
inline double encoder_gradient_error(Encoder& enc, const ModelInput& input, std::uint64_t seed, int per_param = 6) {
  Gen gen(seed + 100);
  std::mt19937_64 rng(seed);
  std::unique_ptr<EncoderTape> tape;
  const Matrix h0 = enc.encode_train(input, rng, tape);
  const Matrix g = gen.matrix(h0.rows(), h0.cols());
  for (Param* p : enc.parameters()) p->zero_grad();
  enc.backward(*tape, g);
  auto loss = [&]() {
    std::mt19937_64 r(seed);
    std::unique_ptr<EncoderTape> t;
    return (enc.encode_train(input, r, t).array() * g.array()).sum();
  };
  double worst = 0.0;
  const double step = 1e-6;
  for (Param* p : enc.parameters()) {
    for (int k = 0; k < per_param; ++k) {
      const auto idx = static_cast<Eigen::Index>(gen.integer(0, static_cast<int>(p->value.size()) - 1));
      double& v = p->value.data()[idx];
      const double saved = v;
      v = saved + step;
      const double up = loss();
      v = saved - step;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = p->grad.data()[idx];
      worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4}));
    }
  }
  return worst;
}

}  // namespace spanemo::testing
