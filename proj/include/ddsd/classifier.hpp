// include/ddsd/classifier.hpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DDSD_CLASSIFIER_HPP_
#define DDSD_CLASSIFIER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ddsd/error.hpp"
#include "ddsd/random.hpp"
#include "ddsd/text_util.hpp"

namespace ddsd {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  bool operator==(const Matrix &) const = default;
};

inline std::vector<double> MatVec(const Matrix &m, std::span<const double> x) {
  if (x.size() != m.cols) throw ValidationError("matvec: dimension mismatch");
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double *w = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
  return y;
}

using Logits = std::array<double, 2>;

/// Linear decision layer: one weight row per class (row 1 = device-directed).
struct LinearHead {
  Matrix weights;  // 2 x embedding_dim
  std::array<double, 2> bias{0.0, 0.0};

  LinearHead() = default;
  explicit LinearHead(std::size_t dim) : weights(2, dim) {}

  std::size_t dim() const { return weights.cols; }
  std::size_t parameter_count() const { return weights.data.size() + bias.size(); }
  bool operator==(const LinearHead &) const = default;
};

inline Logits Forward(const LinearHead &head, std::span<const double> x) {
  if (x.size() != head.dim())
    throw ValidationError("forward: expected " + std::to_string(head.dim()) +
                          " dims, got " + std::to_string(x.size()));
  Logits out{};
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += head.weights(k, i) * x[i];
    out[k] = acc + head.bias[k];
  }
  return out;
}

inline std::array<double, 2> Softmax(const Logits &z) {
  double m = std::max(z[0], z[1]);
  double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  double s = e0 + e1;
  return {e0 / s, e1 / s};
}

inline double ScoreFromLogits(const Logits &z) { return Softmax(z)[1]; }

/// Probability that the example is device-directed.
inline double PredictScore(const LinearHead &head, std::span<const double> x) {
  return ScoreFromLogits(Forward(head, x));
}

/// 1 iff score >= threshold; the boundary counts as device-directed.
inline int Binarize(double score, double threshold = 0.5) {
  return score >= threshold ? 1 : 0;
}

/// -log softmax(z)[label], in a form that keeps full precision for tiny losses.
inline double CrossEntropyLoss(const Logits &z, int label) {
  if (!std::isfinite(z[0]) || !std::isfinite(z[1]))
    throw ValidationError("cross entropy: non-finite logits");
  if (label != 0 && label != 1) throw ValidationError("cross entropy: label must be 0 or 1");
  double m = std::max(z[0], z[1]);
  double lo = std::min(z[0], z[1]);
  return (m - z[label]) + std::log1p(std::exp(lo - m));
}

struct HeadGradient {
  Matrix weights;
  std::array<double, 2> bias{0.0, 0.0};
};

/// Analytic softmax cross-entropy gradient: (p - onehot) outer x.
inline HeadGradient Gradient(const LinearHead &head, std::span<const double> x, int label) {
  if (label != 0 && label != 1) throw ValidationError("gradient: label must be 0 or 1");
  auto p = Softmax(Forward(head, x));
  HeadGradient g{Matrix(2, head.dim()), {}};
  for (std::size_t k = 0; k < 2; ++k) {
    double delta = p[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    g.bias[k] = delta;
    for (std::size_t i = 0; i < x.size(); ++i) g.weights(k, i) = delta * x[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Low-rank adapters

struct LoraAdapter {
  std::size_t rank = 0;
  double alpha = 1.0;
  Matrix down;  // rank x d_in
  Matrix up;    // d_out x rank

  LoraAdapter() = default;
  LoraAdapter(std::size_t r, std::size_t d_in, std::size_t d_out, double a)
      : rank(r), alpha(a), down(r, d_in), up(d_out, r) {
    if (r == 0) throw ValidationError("lora: rank must be positive");
  }

  std::size_t d_in() const { return down.cols; }
  std::size_t d_out() const { return up.rows; }
  double scale() const { return alpha / static_cast<double>(rank); }
  std::size_t parameter_count() const { return rank * (d_in() + d_out()); }
  bool operator==(const LoraAdapter &) const = default;
};

inline std::size_t LoraParameterCount(std::size_t rank, std::size_t d_in, std::size_t d_out) {
  return rank * (d_in + d_out);
}

/// (alpha / rank) * up * down.
inline Matrix LoraDelta(const LoraAdapter &a) {
  Matrix d(a.d_out(), a.d_in());
  const double s = a.scale();
  for (std::size_t o = 0; o < a.d_out(); ++o)
    for (std::size_t i = 0; i < a.d_in(); ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < a.rank; ++r) acc += a.up(o, r) * a.down(r, i);
      d(o, i) = s * acc;
    }
  return d;
}

/// Effective weight of an adapted layer. `base` is left untouched.
inline Matrix ApplyLora(const Matrix &base, const LoraAdapter &a) {
  if (base.rows != a.d_out() || base.cols != a.d_in())
    throw ValidationError("apply_lora: adapter shape does not match base");
  Matrix out = base;
  Matrix d = LoraDelta(a);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += d.data[i];
  return out;
}

/// Frozen projection plus trainable low-rank update, placed in front of the
/// head: h = base x + (alpha / rank) up (down x).
struct AdaptedProjection {
  Matrix base;  // d_out x d_in, frozen
  LoraAdapter adapter;

  std::vector<double> Project(std::span<const double> x) const {
    std::vector<double> h = MatVec(base, x);
    std::vector<double> z = MatVec(adapter.down, x);
    std::vector<double> u = MatVec(adapter.up, z);
    const double s = adapter.scale();
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += s * u[i];
    return h;
  }
  bool operator==(const AdaptedProjection &) const = default;
};

// ---------------------------------------------------------------------------
// Training

enum class Optimizer { kSgd, kMomentumSgd };

struct TrainConfig {
  double learning_rate = 2e-5;
  int epochs = 3;
  double warmup_fraction = 0.03;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kSgd;
  double momentum = 0.9;
  bool l2_normalize = false;
};

inline void Validate(const TrainConfig &c) {
  if (!(c.learning_rate > 0)) throw ValidationError("train: learning_rate must be > 0");
  if (c.epochs <= 0) throw ValidationError("train: epochs must be positive");
  if (!(c.warmup_fraction >= 0 && c.warmup_fraction < 1))
    throw ValidationError("train: warmup_fraction must be in [0, 1)");
  if (c.batch_size == 0) throw ValidationError("train: batch_size must be positive");
  if (c.optimizer == Optimizer::kMomentumSgd && !(c.momentum >= 0 && c.momentum < 1))
    throw ValidationError("train: momentum must be in [0, 1)");
}

/// Shape of the adapter to train in front of the head.
struct LoraSpec {
  std::size_t rank = 8;
  std::size_t d_out = 64;
  double alpha = 16.0;
  double down_init_stddev = 0.01;
};

/// Head plus optional adapted projection; everything needed to score.
struct ClassifierModel {
  LinearHead head;
  std::optional<AdaptedProjection> projection;
  bool l2_normalize = false;
  std::size_t input_dim = 0;

  std::vector<double> Features(std::span<const double> x) const {
    if (x.size() != input_dim)
      throw ValidationError("classifier: expected " + std::to_string(input_dim) +
                            " dims, got " + std::to_string(x.size()));
    std::vector<double> v(x.begin(), x.end());
    if (l2_normalize) {
      double n = 0.0;
      for (double e : v) n += e * e;
      n = std::sqrt(n);
      if (n > 0)
        for (double &e : v) e /= n;
    }
    if (projection) return projection->Project(v);
    return v;
  }
  Logits Logit(std::span<const double> x) const { return Forward(head, Features(x)); }
  double Score(std::span<const double> x) const { return ScoreFromLogits(Logit(x)); }
  bool operator==(const ClassifierModel &) const = default;
};

struct LabeledEmbedding {
  std::vector<double> x;
  int label = 0;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<double> loss_trace;  // mean training loss per epoch
};


/// Initial model: zero head; for adapters a random frozen base, random-normal
/// `down` and zero `up`, so the adapter starts as an exact no-op.
inline ClassifierModel InitialModel(std::size_t input_dim, const TrainConfig &config,
                                    const std::optional<LoraSpec> &lora) {
  ClassifierModel m;
  m.input_dim = input_dim;
  m.l2_normalize = config.l2_normalize;
  if (!lora) {
    m.head = LinearHead(input_dim);
    return m;
  }
  if (lora->rank == 0 || lora->d_out == 0)
    throw ValidationError("train: lora rank and width must be positive");
  std::mt19937_64 rng(config.seed ^ 0x5bd1e9955bd1e995ULL);
  AdaptedProjection p;
  p.base = Matrix(lora->d_out, input_dim);
  const double bound = std::sqrt(3.0 / static_cast<double>(input_dim));
  for (double &w : p.base.data) w = bound * (2.0 * rnd::Uniform(rng) - 1.0);
  p.adapter = LoraAdapter(lora->rank, input_dim, lora->d_out, lora->alpha);
  for (double &w : p.adapter.down.data) w = lora->down_init_stddev * rnd::Normal(rng);
  m.projection = std::move(p);
  m.head = LinearHead(lora->d_out);
  return m;
}

/// Trainable parameters in a fixed order: head weights, head bias, then
/// adapter up and down. The frozen base is not included.
inline std::vector<double *> ParameterViews(ClassifierModel &model) {
  std::vector<double *> params;
  for (double &w : model.head.weights.data) params.push_back(&w);
  for (double &b : model.head.bias) params.push_back(&b);
  if (model.projection) {
    for (double &w : model.projection->adapter.up.data) params.push_back(&w);
    for (double &w : model.projection->adapter.down.data) params.push_back(&w);
  }
  return params;
}

/// Cross-entropy gradient of one example, laid out as ParameterViews.
inline std::vector<double> ParameterGradient(const ClassifierModel &model,
                                             std::span<const double> x, int label,
                                             double *loss_out = nullptr) {
  if (label != 0 && label != 1) throw ValidationError("gradient: label must be 0 or 1");
  if (x.size() != model.input_dim)
    throw ValidationError("gradient: expected " + std::to_string(model.input_dim) +
                          " dims, got " + std::to_string(x.size()));
  std::vector<double> input(x.begin(), x.end());
  if (model.l2_normalize) {
    double nn = 0.0;
    for (double v : input) nn += v * v;
    nn = std::sqrt(nn);
    if (nn > 0)
      for (double &v : input) v /= nn;
  }
  std::vector<double> down_x, h;
  if (model.projection) {
    down_x = MatVec(model.projection->adapter.down, input);
    h = model.projection->Project(input);
  } else {
    h = input;
  }
  const LinearHead &head = model.head;
  Logits z = Forward(head, h);
  if (loss_out) *loss_out = CrossEntropyLoss(z, label);
  auto p = Softmax(z);
  std::array<double, 2> delta{p[0] - (label == 0 ? 1.0 : 0.0), p[1] - (label == 1 ? 1.0 : 0.0)};
  const std::size_t hd = h.size();
  std::size_t total = 2 * hd + 2;
  if (model.projection) total += model.projection->adapter.parameter_count();
  std::vector<double> grad(total, 0.0);
  std::size_t off = 0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < hd; ++i) grad[off + c * hd + i] = delta[c] * h[i];
  off += 2 * hd;
  grad[off] = delta[0];
  grad[off + 1] = delta[1];
  off += 2;
  if (model.projection) {
    const LoraAdapter &ad = model.projection->adapter;
    const double s = ad.scale();
    // dL/dh = W^T delta
    std::vector<double> dh(hd);
    for (std::size_t i = 0; i < hd; ++i)
      dh[i] = head.weights(0, i) * delta[0] + head.weights(1, i) * delta[1];
    for (std::size_t o = 0; o < ad.d_out(); ++o)
      for (std::size_t r = 0; r < ad.rank; ++r) grad[off + o * ad.rank + r] = s * dh[o] * down_x[r];
    off += ad.up.data.size();
    for (std::size_t r = 0; r < ad.rank; ++r) {
      double acc = 0.0;
      for (std::size_t o = 0; o < ad.d_out(); ++o) acc += ad.up(o, r) * dh[o];
      const double dz = s * acc;
      for (std::size_t i = 0; i < ad.d_in(); ++i) grad[off + r * ad.d_in() + i] = dz * input[i];
    }
  }
  return grad;
}

/**
   Mini-batch SGD on softmax cross-entropy. The learning rate ramps linearly
   over the first ceil(warmup_fraction * total_steps) steps, then stays flat.
   With an adapter, the head and the adapter's `up`/`down` are trained and the
   base projection stays frozen.

   Deterministic for a given seed: the shuffle uses a fixed generator and all
   reductions run in index order.
 */
inline TrainResult Train(const std::vector<LabeledEmbedding> &data, const TrainConfig &config,
                         const std::optional<LoraSpec> &lora = std::nullopt) {
  Validate(config);
  if (data.empty()) throw ValidationError("train: empty dataset");
  const std::size_t dim = data.front().x.size();
  if (dim == 0) throw ValidationError("train: zero-dimensional embeddings");
  for (const auto &e : data) {
    if (e.x.size() != dim) throw ValidationError("train: inconsistent embedding dims");
    if (e.label != 0 && e.label != 1) throw ValidationError("train: label must be 0 or 1");
  }

  TrainResult result{InitialModel(dim, config, lora), {}};
  ClassifierModel &model = result.model;

  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);
  const std::size_t warmup_steps =
      static_cast<std::size_t>(std::ceil(config.warmup_fraction * static_cast<double>(total_steps)));

  std::vector<double *> params = ParameterViews(model);
  std::vector<double> grad(params.size(), 0.0), velocity(params.size(), 0.0);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rnd::Shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = b; k < e; ++k) {
        const LabeledEmbedding &ex = data[order[k]];
        double loss = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> g;
        try {
          g = ParameterGradient(model, ex.x, ex.label, &loss);
        } catch (const ValidationError &) {
          // diverged logits
        }
        if (!std::isfinite(loss))
          throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(step) + ", example " +
                              std::to_string(order[k]));
        epoch_loss += loss;
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      }
      const double inv = 1.0 / static_cast<double>(e - b);
      double lr = config.learning_rate;
      if (step < warmup_steps)
        lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
      for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grad[i] * inv;
        if (config.optimizer == Optimizer::kMomentumSgd) {
          velocity[i] = config.momentum * velocity[i] + g;
          g = velocity[i];
        }
        *params[i] -= lr * g;
      }
      ++step;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

/// Mean loss of `model` over `data`, in index order.
inline double MeanLoss(const ClassifierModel &model, const std::vector<LabeledEmbedding> &data) {
  double total = 0.0;
  for (const auto &e : data) total += CrossEntropyLoss(model.Logit(e.x), e.label);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Checkpoints: line-oriented text, every real in shortest round-trip form.

inline constexpr std::string_view kCheckpointMagic = "ddsd-checkpoint 1";

namespace detail {

inline void WriteMatrix(std::ostringstream &os, const std::string &name, const Matrix &m) {
  os << name << ' ' << m.rows << ' ' << m.cols << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) os << ' ';
      os << FormatDouble(m(r, c));
    }
    os << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(std::string_view doc) : lines_(Split(doc, '\n')) {}
  std::vector<std::string_view> Next() {
    while (pos_ < lines_.size()) {
      auto f = SplitFields(Trim(lines_[pos_++]));
      if (!f.empty()) return f;
    }
    throw ParseError(pos_, "checkpoint: unexpected end of file");
  }
  std::size_t line() const { return pos_; }
  double Real(std::string_view tok) {
    auto v = ParseDouble(tok);
    if (!v) throw ParseError(pos_, "checkpoint: bad number '" + std::string(tok) + "'");
    return *v;
  }
  std::size_t Count(std::string_view tok) {
    auto v = ParseInt<std::size_t>(tok);
    if (!v) throw ParseError(pos_, "checkpoint: bad count '" + std::string(tok) + "'");
    return *v;
  }
  std::vector<std::string_view> Expect(std::string_view key, std::size_t fields) {
    auto f = Next();
    if (f[0] != key || f.size() != fields)
      throw ParseError(pos_, "checkpoint: expected '" + std::string(key) + "' line");
    return f;
  }
  Matrix ReadMatrix(std::string_view name) {
    auto f = Expect(name, 3);
    Matrix m(Count(f[1]), Count(f[2]));
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto row = Next();
      if (row.size() != m.cols) throw ParseError(pos_, "checkpoint: wrong row width");
      for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = Real(row[c]);
    }
    return m;
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Free-form metadata values must not contain newlines.
inline std::string SaveCheckpoint(const ClassifierModel &m,
                                  const std::map<std::string, std::string> &meta = {}) {
  std::ostringstream os;
  os << kCheckpointMagic << '\n';
  for (const auto &[k, v] : meta) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ValidationError("checkpoint: bad metadata entry '" + k + "'");
    os << "meta " << k << ' ' << v << '\n';
  }
  os << "input_dim " << m.input_dim << '\n';
  os << "l2_normalize " << (m.l2_normalize ? 1 : 0) << '\n';
  detail::WriteMatrix(os, "head_weights", m.head.weights);
  os << "head_bias " << FormatDouble(m.head.bias[0]) << ' ' << FormatDouble(m.head.bias[1])
     << '\n';
  if (m.projection) {
    const auto &a = m.projection->adapter;
    os << "lora " << a.rank << ' ' << FormatDouble(a.alpha) << '\n';
    detail::WriteMatrix(os, "base", m.projection->base);
    detail::WriteMatrix(os, "down", a.down);
    detail::WriteMatrix(os, "up", a.up);
  } else {
    os << "lora none\n";
  }
  os << "end\n";
  return os.str();
}

struct LoadedCheckpoint {
  ClassifierModel model;
  std::map<std::string, std::string> meta;
};

inline LoadedCheckpoint LoadCheckpoint(std::string_view doc) {
  detail::LineReader in(doc);
  LoadedCheckpoint out;
  {
    auto f = in.Next();
    if (f.size() != 2 || f[0] != "ddsd-checkpoint" || f[1] != "1")
      throw ParseError(in.line(), "checkpoint: bad header");
  }
  auto f = in.Next();
  while (f[0] == "meta") {
    if (f.size() < 2) throw ParseError(in.line(), "checkpoint: bad meta line");
    // Value is the raw remainder of the line after the key.
    std::string value;
    for (std::size_t i = 2; i < f.size(); ++i) {
      if (i > 2) value += ' ';
      value += f[i];
    }
    out.meta[std::string(f[1])] = value;
    f = in.Next();
  }
  if (f[0] != "input_dim" || f.size() != 2)
    throw ParseError(in.line(), "checkpoint: expected 'input_dim' line");
  ClassifierModel &m = out.model;
  m.input_dim = in.Count(f[1]);
  m.l2_normalize = in.Expect("l2_normalize", 2)[1] == "1";
  m.head.weights = in.ReadMatrix("head_weights");
  if (m.head.weights.rows != 2) throw ParseError(in.line(), "checkpoint: head must have 2 rows");
  auto b = in.Expect("head_bias", 3);
  m.head.bias = {in.Real(b[1]), in.Real(b[2])};
  auto l = in.Next();
  if (l[0] != "lora") throw ParseError(in.line(), "checkpoint: expected 'lora' line");
  if (!(l.size() == 2 && l[1] == "none")) {
    if (l.size() != 3) throw ParseError(in.line(), "checkpoint: bad 'lora' line");
    AdaptedProjection p;
    p.adapter.rank = in.Count(l[1]);
    p.adapter.alpha = in.Real(l[2]);
    p.base = in.ReadMatrix("base");
    p.adapter.down = in.ReadMatrix("down");
    p.adapter.up = in.ReadMatrix("up");
    const auto &a = p.adapter;
    if (a.rank == 0 || a.down.rows != a.rank || a.up.cols != a.rank ||
        a.down.cols != m.input_dim || p.base.cols != m.input_dim ||
        a.up.rows != p.base.rows || m.head.weights.cols != p.base.rows)
      throw ParseError(in.line(), "checkpoint: inconsistent adapter shapes");
    m.projection = std::move(p);
  } else if (m.head.weights.cols != m.input_dim) {
    throw ParseError(in.line(), "checkpoint: head width does not match input_dim");
  }
  in.Expect("end", 1);
  return out;
}

}  // namespace ddsd

#endif  // DDSD_CLASSIFIER_HPP_
